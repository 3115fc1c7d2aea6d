#include "relugeo/model_io.hpp"

#include "relugeo/csv.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace relugeo {

namespace {

constexpr const char* kMagic = "relugeo model";
constexpr const char* kVersion = "v1";

/// Token reader that tracks byte offsets for error reporting.
class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next(const char* what) {
    skip_space();
    long at = offset_;
    std::string tok;
    int c;
    while ((c = in_.get()) != EOF && !std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      ++offset_;
    }
    if (c != EOF) ++offset_;  // the delimiter
    if (tok.empty())
      throw ModelParseError(std::string("unexpected end of file, expected ") + what, at);
    last_token_at_ = at;
    return tok;
  }

  void expect(const char* literal) {
    std::string tok = next(literal);
    if (tok != literal)
      throw ModelParseError(std::string("expected '") + literal + "', got '" + tok + "'",
                            last_token_at_);
  }

  double number(const char* what) {
    std::string tok = next(what);
    const char* s = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end != s + tok.size())
      throw ModelParseError(std::string("malformed ") + what + ": '" + tok + "'",
                            last_token_at_);
    return v;
  }

  long integer(const char* what) {
    std::string tok = next(what);
    const char* s = tok.c_str();
    char* end = nullptr;
    long v = std::strtol(s, &end, 10);
    if (end != s + tok.size())
      throw ModelParseError(std::string("malformed ") + what + ": '" + tok + "'",
                            last_token_at_);
    return v;
  }

  long last_token_at() const { return last_token_at_; }

 private:
  void skip_space() {
    int c;
    while ((c = in_.peek()) != EOF && std::isspace(c)) {
      in_.get();
      ++offset_;
    }
  }

  std::istream& in_;
  long offset_ = 0;
  long last_token_at_ = 0;
};

}  // namespace

void save_model(const Network& net, std::ostream& out) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "widths";
  for (int w : net.layer_widths()) out << ' ' << w;
  out << '\n';
  if (net.init_meta()) {
    const auto& m = *net.init_meta();
    out << "init " << m.seed << ' ' << m.weights.to_string() << ' ' << m.biases.to_string()
        << '\n';
  } else {
    out << "init none\n";
  }
  for (int l = 1; l <= net.affine_layers(); ++l) {
    const auto& W = net.weight(l);
    out << "W " << l;
    for (Eigen::Index r = 0; r < W.rows(); ++r)
      for (Eigen::Index c = 0; c < W.cols(); ++c) out << ' ' << format_double_hex(W(r, c));
    out << '\n';
    if (l < net.affine_layers()) {
      const auto& b = net.bias(l);
      out << "b " << l;
      for (Eigen::Index r = 0; r < b.size(); ++r) out << ' ' << format_double_hex(b(r));
      out << '\n';
    }
  }
  if (net.output_bias()) {
    out << "ob";
    for (Eigen::Index r = 0; r < net.output_bias()->size(); ++r)
      out << ' ' << format_double_hex((*net.output_bias())(r));
    out << '\n';
  } else {
    out << "ob none\n";
  }
  out << "end\n";
}

Network load_model(std::istream& in) {
  TokenReader tok(in);
  std::string magic1 = tok.next("format magic");
  std::string magic2 = tok.next("format magic");
  if (magic1 + " " + magic2 != kMagic)
    throw ModelParseError("not a model file", 0);
  std::string version = tok.next("format version");
  if (version != kVersion)
    throw ModelParseError("unsupported model version '" + version + "', expected " + kVersion,
                          tok.last_token_at());

  tok.expect("widths");
  std::vector<int> widths;
  std::string t = tok.next("layer width or 'init'");
  while (t != "init") {
    char* end = nullptr;
    long w = std::strtol(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || w <= 0)
      throw ModelParseError("malformed layer width '" + t + "'", tok.last_token_at());
    widths.push_back(static_cast<int>(w));
    t = tok.next("layer width or 'init'");
  }
  if (widths.size() < 2) throw ModelParseError("need at least two layer widths", 0);

  std::optional<InitMeta> meta;
  std::string init_first = tok.next("init seed or 'none'");
  if (init_first != "none") {
    InitMeta m;
    m.seed = std::strtoull(init_first.c_str(), nullptr, 10);
    try {
      m.weights = WeightScheme::parse(tok.next("weight scheme"));
      m.biases = BiasScheme::parse(tok.next("bias scheme"));
    } catch (const std::invalid_argument& e) {
      throw ModelParseError(e.what(), tok.last_token_at());
    }
    meta = m;
  }

  const std::size_t L = widths.size() - 1;
  std::vector<Eigen::MatrixXd> weights(L);
  std::vector<Eigen::VectorXd> biases(L - 1);
  for (std::size_t l = 1; l <= L; ++l) {
    tok.expect("W");
    if (tok.integer("weight layer index") != static_cast<long>(l))
      throw ModelParseError("weight layers out of order", tok.last_token_at());
    Eigen::MatrixXd W(widths[l], widths[l - 1]);
    for (Eigen::Index r = 0; r < W.rows(); ++r)
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = tok.number("weight value");
    weights[l - 1] = std::move(W);
    if (l < L) {
      tok.expect("b");
      if (tok.integer("bias layer index") != static_cast<long>(l))
        throw ModelParseError("bias layers out of order", tok.last_token_at());
      Eigen::VectorXd b(widths[l]);
      for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = tok.number("bias value");
      biases[l - 1] = std::move(b);
    }
  }

  tok.expect("ob");
  std::optional<Eigen::VectorXd> output_bias;
  std::string ob_first = tok.next("output bias or 'none'");
  if (ob_first != "none") {
    Eigen::VectorXd ob(widths.back());
    const char* s = ob_first.c_str();
    char* end = nullptr;
    ob(0) = std::strtod(s, &end);
    if (end != s + ob_first.size())
      throw ModelParseError("malformed output bias value '" + ob_first + "'",
                            tok.last_token_at());
    for (Eigen::Index r = 1; r < ob.size(); ++r) ob(r) = tok.number("output bias value");
    output_bias = std::move(ob);
  }
  tok.expect("end");

  Network net(std::move(widths), std::move(weights), std::move(biases), std::move(output_bias));
  if (meta) net.set_init_meta(*meta);
  return net;
}

void save_model_file(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  save_model(net, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Network load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace relugeo
