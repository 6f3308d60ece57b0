#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include "ddcam/error.hpp"
#include "ddcam/tensor.hpp"

namespace ddcam {

static_assert(std::endian::native == std::endian::little, "NPY IO assumes a little-endian host");

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;
constexpr std::size_t kPreludeLen = kMagicLen + 2 + 2;  // magic, version, header length
constexpr std::size_t kAlignment = 64;

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string describe(const std::filesystem::path& path, const std::string& what) {
  return path.string() + ": " + what;
}

// Extracts the value of `key` from the header dict literal. Values never
// contain quotes so a regex over the flat dict text is sufficient.
std::string dict_value(const std::string& header, const std::string& key,
                       const std::filesystem::path& path) {
  const std::regex re("['\"]" + key + "['\"]\\s*:\\s*('[^']*'|\"[^\"]*\"|\\([^)]*\\)|True|False)");
  std::smatch m;
  if (!std::regex_search(header, m, re)) {
    throw FormatError(describe(path, "NPY header lacks '" + key + "'"));
  }
  return m[1].str();
}

Shape parse_shape(const std::string& tuple, const std::filesystem::path& path) {
  Shape shape;
  std::string body = tuple.substr(1, tuple.size() - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;  // trailing comma of 1-tuples
    const auto last = item.find_last_not_of(" \tL");
    const auto digits = item.substr(first, last - first + 1);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
      throw FormatError(describe(path, "bad shape entry '" + item + "'"));
    }
    shape.push_back(static_cast<std::size_t>(std::stoull(digits)));
  }
  return shape;
}

}  // namespace

Tensor load_tensor(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  if (bytes.size() < kPreludeLen || bytes.compare(0, kMagicLen, kMagic, kMagicLen) != 0) {
    throw FormatError(describe(path, "not an NPY file (bad magic)"));
  }
  const auto major = static_cast<unsigned char>(bytes[6]);
  const auto minor = static_cast<unsigned char>(bytes[7]);
  if (major != 1 || minor != 0) {
    throw FormatError(describe(path, "unsupported NPY version " + std::to_string(major) + "." +
                                         std::to_string(minor) + " (need 1.0)"));
  }
  const std::size_t header_len = static_cast<unsigned char>(bytes[8]) |
                                 (static_cast<std::size_t>(static_cast<unsigned char>(bytes[9])) << 8);
  if (bytes.size() < kPreludeLen + header_len) {
    throw FormatError(describe(path, "truncated NPY header"));
  }
  const std::string header = bytes.substr(kPreludeLen, header_len);

  const auto descr = dict_value(header, "descr", path);
  if (descr != "'<f4'" && descr != "\"<f4\"") {
    throw FormatError(describe(path, "dtype " + descr + " is not little-endian float32 ('<f4')"));
  }
  if (dict_value(header, "fortran_order", path) != "False") {
    throw FormatError(describe(path, "Fortran-ordered arrays are not supported"));
  }
  const auto shape_text = dict_value(header, "shape", path);
  if (shape_text.front() != '(') throw FormatError(describe(path, "shape is not a tuple"));
  Shape shape = parse_shape(shape_text, path);

  const std::size_t count = shape_product(shape);
  const std::size_t payload = bytes.size() - kPreludeLen - header_len;
  if (payload != count * sizeof(float)) {
    throw FormatError(describe(path, "payload has " + std::to_string(payload) + " bytes, shape " +
                                         shape_to_string(shape) + " needs " +
                                         std::to_string(count * sizeof(float))));
  }
  std::vector<float> data(count);
  if (count != 0) std::memcpy(data.data(), bytes.data() + kPreludeLen + header_len, payload);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::isfinite(data[i])) {
      throw FormatError(describe(path, "non-finite value at flat index " + std::to_string(i)));
    }
  }
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) {
  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < t.rank(); ++i) {
    dict += std::to_string(t.shape()[i]);
    if (t.rank() == 1 || i + 1 < t.rank()) dict += ",";
    if (i + 1 < t.rank()) dict += " ";
  }
  dict += "), }";
  // Pad with spaces so the payload starts on an aligned offset; the header ends in '\n'.
  const std::size_t unpadded = kPreludeLen + dict.size() + 1;
  const std::size_t padding = (kAlignment - unpadded % kAlignment) % kAlignment;
  dict.append(padding, ' ');
  dict += '\n';

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const auto header_len = static_cast<std::uint16_t>(dict.size());
  out.write(kMagic, kMagicLen);
  out.put('\x01');
  out.put('\x00');
  out.put(static_cast<char>(header_len & 0xFF));
  out.put(static_cast<char>(header_len >> 8));
  out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
  if (!t.empty()) {
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void save_pgm(const SaliencyMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << map.width() << ' ' << map.height() << "\n255\n";
  std::string pixels;
  pixels.reserve(map.height() * map.width());
  for (float v : map.tensor().data()) {
    pixels.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0F * v))));
  }
  out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace ddcam
