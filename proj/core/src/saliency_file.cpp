#include "hdm/saliency_file.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

namespace hdm {
namespace {

constexpr char kMagic[6] = {'H', 'D', 'M', 'S', 'A', 'L'};

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u32(out, bits);
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  void need(std::size_t count, const char* what) {
    if (pos + count > data.size())
      throw FormatError(std::string("saliency file truncated reading ") + what + ": expected " +
                        std::to_string(count) + " bytes, got " +
                        std::to_string(data.size() - pos));
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const auto b0 = static_cast<std::uint8_t>(data[pos]);
    const auto b1 = static_cast<std::uint8_t>(data[pos + 1]);
    pos += 2;
    return static_cast<std::uint16_t>(b0 | (b1 << 8));
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::string str(const char* what) {
    const std::uint16_t len = u16(what);
    need(len, what);
    std::string s = data.substr(pos, len);
    pos += len;
    return s;
  }
};

}  // namespace

void save_saliency(const SaliencyRecord& record, const std::filesystem::path& path) {
  if (record.map.v.empty()) throw InputError("save_saliency: empty map");
  if (record.method.size() > std::numeric_limits<std::uint16_t>::max() ||
      record.source.size() > std::numeric_limits<std::uint16_t>::max())
    throw InputError("save_saliency: label too long");

  std::string out;
  out.append(kMagic, sizeof kMagic);
  put_u16(out, static_cast<std::uint16_t>(kSaliencyFileVersion));
  put_u32(out, static_cast<std::uint32_t>(record.map.h));
  put_u32(out, static_cast<std::uint32_t>(record.map.w));
  put_u32(out, static_cast<std::uint32_t>(record.target_class));
  put_u16(out, static_cast<std::uint16_t>(record.method.size()));
  out.append(record.method);
  put_u16(out, static_cast<std::uint16_t>(record.source.size()));
  out.append(record.source);
  for (double v : record.map.v) put_f32(out, static_cast<float>(v));

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw InputError("save_saliency: cannot open " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw InputError("save_saliency: write failed for " + path.string());
}

SaliencyRecord load_saliency(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw InputError("load_saliency: cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

  Reader r{data};
  r.need(sizeof kMagic, "magic");
  if (std::memcmp(data.data(), kMagic, sizeof kMagic) != 0)
    throw FormatError("load_saliency: bad magic in " + path.string());
  r.pos = sizeof kMagic;
  const std::uint16_t version = r.u16("version");
  if (version != kSaliencyFileVersion)
    throw FormatError("load_saliency: unsupported version " + std::to_string(version));
  const std::uint32_t h = r.u32("height");
  const std::uint32_t w = r.u32("width");
  const std::uint32_t cls = r.u32("class");
  const std::string method = r.str("method label");
  const std::string source = r.str("source label");
  if (h == 0 || w == 0) throw FormatError("load_saliency: zero dimension");
  const std::size_t count = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  r.need(count * 4, "payload");

  MaskGrid map(static_cast<int>(h), static_cast<int>(w));
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = r.u32("payload");
    float f;
    std::memcpy(&f, &bits, sizeof f);
    map.v[i] = static_cast<double>(f);
  }
  if (r.pos != data.size())
    throw FormatError("load_saliency: trailing data: expected " + std::to_string(r.pos) +
                      " bytes, got " + std::to_string(data.size()));
  return make_saliency_record(std::move(map), method, source, static_cast<int>(cls));
}

}  // namespace hdm
