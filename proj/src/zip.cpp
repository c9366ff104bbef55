#include "galax/zip.hpp"

#include <zlib.h>

#include <cstdint>
#include <limits>

#include "galax/error.hpp"

namespace galax::zip {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::uint16_t kDosTime = 0;       // 00:00:00
constexpr std::uint16_t kDosDate = 0x0021;  // 1980-01-01

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

std::uint32_t crc_of(const std::string& data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - done, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data() + done), chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint16_t u16(std::size_t at, const std::string& what) const {
    need(at, 2, what);
    return static_cast<std::uint16_t>(byte(at) | byte(at + 1) << 8);
  }
  std::uint32_t u32(std::size_t at, const std::string& what) const {
    need(at, 4, what);
    return static_cast<std::uint32_t>(byte(at)) | static_cast<std::uint32_t>(byte(at + 1)) << 8 |
           static_cast<std::uint32_t>(byte(at + 2)) << 16 |
           static_cast<std::uint32_t>(byte(at + 3)) << 24;
  }
  std::string slice(std::size_t at, std::size_t len, const std::string& what) const {
    need(at, len, what);
    return bytes_.substr(at, len);
  }

 private:
  unsigned byte(std::size_t at) const { return static_cast<unsigned char>(bytes_[at]); }
  void need(std::size_t at, std::size_t len, const std::string& what) const {
    if (at > bytes_.size() || len > bytes_.size() - at)
      throw Error(Errc::integrity, "archive member '" + what + "' is truncated");
  }
  const std::string& bytes_;
};

}  // namespace

std::string write(const std::vector<Member>& members) {
  std::string out, central;
  for (const auto& [name, data] : members) {
    if (data.size() > std::numeric_limits<std::uint32_t>::max() || name.size() > 0xffff)
      throw Error(Errc::io, "zip: member '" + name + "' too large");
    const auto offset = static_cast<std::uint32_t>(out.size());
    const std::uint32_t crc = crc_of(data);
    const auto size = static_cast<std::uint32_t>(data.size());

    put32(out, kLocalSig);
    put16(out, 10);  // version needed
    put16(out, 0);   // flags
    put16(out, 0);   // stored
    put16(out, kDosTime);
    put16(out, kDosDate);
    put32(out, crc);
    put32(out, size);
    put32(out, size);
    put16(out, static_cast<std::uint16_t>(name.size()));
    put16(out, 0);
    out += name;
    out += data;

    put32(central, kCentralSig);
    put16(central, 20);  // version made by
    put16(central, 10);
    put16(central, 0);
    put16(central, 0);
    put16(central, kDosTime);
    put16(central, kDosDate);
    put32(central, crc);
    put32(central, size);
    put32(central, size);
    put16(central, static_cast<std::uint16_t>(name.size()));
    put16(central, 0);  // extra
    put16(central, 0);  // comment
    put16(central, 0);  // disk
    put16(central, 0);  // internal attributes
    put32(central, 0);  // external attributes
    put32(central, offset);
    central += name;
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put32(out, kEndSig);
  put16(out, 0);
  put16(out, 0);
  put16(out, static_cast<std::uint16_t>(members.size()));
  put16(out, static_cast<std::uint16_t>(members.size()));
  put32(out, static_cast<std::uint32_t>(central.size()));
  put32(out, cd_offset);
  put16(out, 0);
  return out;
}

std::vector<Member> read(const std::string& bytes) {
  const Reader r(bytes);
  if (bytes.size() < 22) throw Error(Errc::integrity, "archive is not a ZIP file");
  std::size_t end = std::string::npos;
  for (std::size_t at = bytes.size() - 22;; --at) {
    if (r.u32(at, "end of central directory") == kEndSig) {
      end = at;
      break;
    }
    if (at == 0 || bytes.size() - at > 22 + 0xffff) break;
  }
  if (end == std::string::npos) throw Error(Errc::integrity, "archive has no ZIP directory");

  const std::uint16_t count = r.u16(end + 10, "central directory");
  std::size_t at = r.u32(end + 16, "central directory");
  std::vector<Member> members;
  for (std::uint16_t k = 0; k < count; ++k) {
    if (r.u32(at, "central directory") != kCentralSig)
      throw Error(Errc::integrity, "archive central directory is corrupt");
    const std::uint16_t method = r.u16(at + 10, "central directory");
    const std::uint32_t crc = r.u32(at + 16, "central directory");
    const std::uint32_t size = r.u32(at + 20, "central directory");
    const std::uint16_t name_len = r.u16(at + 28, "central directory");
    const std::uint16_t extra_len = r.u16(at + 30, "central directory");
    const std::uint16_t comment_len = r.u16(at + 32, "central directory");
    const std::uint32_t local = r.u32(at + 42, "central directory");
    std::string name = r.slice(at + 46, name_len, "central directory");
    at += 46u + name_len + extra_len + comment_len;

    if (method != 0)
      throw Error(Errc::integrity, "archive member '" + name + "' uses unsupported compression");
    if (r.u32(local, name) != kLocalSig)
      throw Error(Errc::integrity, "archive member '" + name + "' has a corrupt local header");
    const std::size_t data_at = local + 30u + r.u16(local + 26, name) + r.u16(local + 28, name);
    std::string data = r.slice(data_at, size, name);
    if (crc_of(data) != crc)
      throw Error(Errc::integrity, "archive member '" + name + "' failed its CRC check");
    members.emplace_back(std::move(name), std::move(data));
  }
  return members;
}

}  // namespace galax::zip
