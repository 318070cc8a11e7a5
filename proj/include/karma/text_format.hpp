#ifndef KARMA_TEXT_FORMAT_HPP
#define KARMA_TEXT_FORMAT_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace karma::text {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double x);

double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> split_ws(std::string_view s);
std::string_view trim(std::string_view s);

// FNV-1a 64-bit content hash, hex encoded.
std::string content_hash(std::string_view bytes);
std::string file_hash(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace karma::text

#endif  // KARMA_TEXT_FORMAT_HPP
