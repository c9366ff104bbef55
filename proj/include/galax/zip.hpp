#pragma once

#include <string>
#include <utility>
#include <vector>

namespace galax::zip {

using Member = std::pair<std::string, std::string>;

/// Uncompressed ("stored") ZIP with every timestamp pinned to 1980-01-01 00:00,
/// so identical members in identical order give identical bytes.
std::string write(const std::vector<Member>& members);

/// Reads a stored-method ZIP. CRC or structure faults raise an integrity
/// error naming the member.
std::vector<Member> read(const std::string& bytes);

}  // namespace galax::zip
