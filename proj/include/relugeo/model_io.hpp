#pragma once

#include "relugeo/network.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace relugeo {

/// Structured parse failure; byte_offset points at the offending token's
/// position in the stream.
struct ModelParseError : std::runtime_error {
  ModelParseError(const std::string& what, long byte_offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset(byte_offset) {}
  long byte_offset = 0;
};

/// Plain-text model format, version-checked, hex-float values: a round trip
/// reproduces every real64 bit-exactly.
void save_model(const Network& net, std::ostream& out);
Network load_model(std::istream& in);

void save_model_file(const Network& net, const std::string& path);
Network load_model_file(const std::string& path);

}  // namespace relugeo
