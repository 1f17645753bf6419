#pragma once

#include <string>

namespace esn {

/// Shortest decimal string that round-trips the exact double value.
std::string format_double(double v);

/// Writes content to path via a temp file and rename, creating parent
/// directories; throws std::runtime_error leaving no partial file behind.
void write_text_atomic(const std::string& path, const std::string& content);

/// Reads a whole file; throws std::runtime_error when unreadable.
std::string read_text_file(const std::string& path);

}  // namespace esn
