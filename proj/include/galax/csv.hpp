#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace galax::csv {

using Row = std::vector<std::string>;

/// RFC 4180 parsing: quoted fields, doubled quotes, CRLF or LF line ends.
std::vector<Row> parse(std::string_view text);

std::string quote(std::string_view field);
std::string join(const Row& fields);

/// 17 significant digits; "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double v);
/// Whole-field parse; false on trailing garbage or empty input.
bool parse_double(std::string_view text, double& out);

}  // namespace galax::csv
