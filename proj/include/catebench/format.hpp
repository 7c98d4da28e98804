#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace catebench {

// Shortest decimal text that round-trips to the same double; integral values
// keep a trailing ".0" so "5.0" reads as a real. Non-finite values render as
// "nan", "inf", "-inf".
std::string format_real(double value);

double parse_real(std::string_view text);            // throws std::invalid_argument
long long parse_integer(std::string_view text);      // throws std::invalid_argument

std::string_view trim(std::string_view text) noexcept;

// Splits one CSV line. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

// Comma-separated list of integers, e.g. "1,2,3,5"; "a-b" expands to a range.
std::vector<int> parse_int_list(std::string_view text);
std::vector<double> parse_real_list(std::string_view text);

// key=value lines; '#' starts a comment, blank lines ignored. Later keys win.
std::map<std::string, std::string> parse_key_values(std::string_view text);

void write_text_file(const std::string& path, std::string_view content);
std::string read_text_file(const std::string& path);

}  // namespace catebench
