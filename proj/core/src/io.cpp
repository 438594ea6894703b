#include "ueval/io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>

namespace ueval {

namespace {

constexpr char kMagic[4] = {'U', 'E', 'T', '1'};

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError(IoErrorKind::kFileSystem,
                  "cannot open " + path.string() + " for reading");
  std::vector<std::byte> bytes;
  in.seekg(0, std::ios::end);
  const std::streamoff size = in.tellg();
  in.seekg(0, std::ios::beg);
  bytes.resize(static_cast<std::size_t>(size));
  if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in)
    throw IoError(IoErrorKind::kFileSystem, "failed to read " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path,
                std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError(IoErrorKind::kFileSystem,
                  "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError(IoErrorKind::kFileSystem,
                  "failed to write " + path.string());
}

std::uint32_t load_u32_le(const std::byte* p) {
  return static_cast<std::uint32_t>(std::to_integer<std::uint32_t>(p[0]) |
                                    std::to_integer<std::uint32_t>(p[1]) << 8 |
                                    std::to_integer<std::uint32_t>(p[2]) << 16 |
                                    std::to_integer<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(std::uint32_t v, std::byte* p) {
  p[0] = static_cast<std::byte>(v & 0xff);
  p[1] = static_cast<std::byte>((v >> 8) & 0xff);
  p[2] = static_cast<std::byte>((v >> 16) & 0xff);
  p[3] = static_cast<std::byte>((v >> 24) & 0xff);
}

std::uint64_t load_bits_le(const std::byte* p, std::size_t size) {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < size; ++i)
    bits |= std::to_integer<std::uint64_t>(p[i]) << (8 * i);
  return bits;
}

void store_bits_le(std::uint64_t bits, std::byte* p, std::size_t size) {
  for (std::size_t i = 0; i < size; ++i)
    p[i] = static_cast<std::byte>((bits >> (8 * i)) & 0xff);
}

template <typename T>
std::vector<T> decode_payload(const RawTensor& raw) {
  const std::size_t size = raw.element_size();
  const std::size_t count = raw.element_count();
  std::vector<T> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t bits = load_bits_le(raw.payload.data() + i * size,
                                            size);
    switch (raw.dtype) {
      case Dtype::kU8:
        out[i] = static_cast<T>(static_cast<std::uint8_t>(bits));
        break;
      case Dtype::kI32:
        out[i] = static_cast<T>(static_cast<std::int32_t>(
            static_cast<std::uint32_t>(bits)));
        break;
      case Dtype::kF32: {
        float f;
        const std::uint32_t b32 = static_cast<std::uint32_t>(bits);
        std::memcpy(&f, &b32, sizeof(f));
        out[i] = static_cast<T>(f);
        break;
      }
      case Dtype::kF64: {
        double d;
        std::memcpy(&d, &bits, sizeof(d));
        out[i] = static_cast<T>(d);
        break;
      }
    }
  }
  return out;
}

template <typename T>
RawTensor encode_payload(Dtype dtype, std::vector<std::uint32_t> dims,
                         std::span<const T> values) {
  RawTensor raw;
  raw.dtype = dtype;
  raw.dims = std::move(dims);
  const std::size_t size = dtype_size(dtype);
  raw.payload.resize(values.size() * size);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    switch (dtype) {
      case Dtype::kU8:
        bits = static_cast<std::uint8_t>(values[i]);
        break;
      case Dtype::kI32:
        bits = static_cast<std::uint32_t>(static_cast<std::int32_t>(values[i]));
        break;
      case Dtype::kF32: {
        const float f = static_cast<float>(values[i]);
        std::uint32_t b32;
        std::memcpy(&b32, &f, sizeof(f));
        bits = b32;
        break;
      }
      case Dtype::kF64: {
        const double d = static_cast<double>(values[i]);
        std::memcpy(&bits, &d, sizeof(d));
        break;
      }
    }
    store_bits_le(bits, raw.payload.data() + i * size, size);
  }
  return raw;
}

[[noreturn]] void throw_invariant(const std::string& report,
                                  const std::filesystem::path& path) {
  throw IoError(IoErrorKind::kInvariantViolation,
                path.string() + ": " + report);
}

bool is_pgm(std::span<const std::byte> bytes) {
  return bytes.size() >= 2 && std::to_integer<char>(bytes[0]) == 'P' &&
         std::to_integer<char>(bytes[1]) == '5';
}

bool is_uet(std::span<const std::byte> bytes) {
  return bytes.size() >= 4 &&
         std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0;
}

RawTensor parse_uet(std::span<const std::byte> bytes,
                    const std::filesystem::path& path) {
  if (!is_uet(bytes))
    throw IoError(IoErrorKind::kBadMagic,
                  path.string() +
                      ": bad magic at byte offset 0, expected \"UET1\"");
  if (bytes.size() < 6)
    throw IoError(IoErrorKind::kTruncated,
                  path.string() + ": header truncated at byte offset " +
                      std::to_string(bytes.size()));
  const std::uint8_t dtype_code = std::to_integer<std::uint8_t>(bytes[4]);
  if (dtype_code > 3)
    throw IoError(IoErrorKind::kBadHeader,
                  path.string() + ": unknown dtype code " +
                      std::to_string(dtype_code) + " at byte offset 4");
  const std::uint8_t rank = std::to_integer<std::uint8_t>(bytes[5]);
  if (rank == 0 || rank > 8)
    throw IoError(IoErrorKind::kBadHeader,
                  path.string() + ": unsupported rank " +
                      std::to_string(rank) + " at byte offset 5");
  const std::size_t header = 6 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < header)
    throw IoError(IoErrorKind::kTruncated,
                  path.string() + ": dimension list truncated at byte offset " +
                      std::to_string(bytes.size()));

  RawTensor raw;
  raw.dtype = static_cast<Dtype>(dtype_code);
  raw.dims.resize(rank);
  std::size_t count = 1;
  for (std::uint8_t i = 0; i < rank; ++i) {
    raw.dims[i] = load_u32_le(bytes.data() + 6 + 4 * i);
    if (raw.dims[i] == 0)
      throw IoError(IoErrorKind::kShapeMismatch,
                    path.string() + ": dimension " + std::to_string(i) +
                        " is zero");
    count *= raw.dims[i];
  }
  const std::size_t expected = count * dtype_size(raw.dtype);
  const std::size_t actual = bytes.size() - header;
  if (actual != expected)
    throw IoError(IoErrorKind::kTruncated,
                  path.string() + ": payload holds " + std::to_string(actual) +
                      " bytes at offset " + std::to_string(header) +
                      ", expected " + std::to_string(expected));
  raw.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                     bytes.end());
  return raw;
}

PgmImage parse_pgm(std::span<const std::byte> bytes,
                   const std::filesystem::path& path) {
  std::size_t pos = 2;  // past "P5"
  auto next_token = [&]() -> std::size_t {
    // skip whitespace and '#' comments
    while (pos < bytes.size()) {
      const char ch = std::to_integer<char>(bytes[pos]);
      if (ch == '#') {
        while (pos < bytes.size() && std::to_integer<char>(bytes[pos]) != '\n')
          ++pos;
      } else if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size())
      throw IoError(IoErrorKind::kBadHeader,
                    path.string() + ": PGM header ends at byte offset " +
                        std::to_string(pos));
    std::size_t value = 0;
    bool any = false;
    while (pos < bytes.size()) {
      const char ch = std::to_integer<char>(bytes[pos]);
      if (ch < '0' || ch > '9') break;
      value = value * 10 + static_cast<std::size_t>(ch - '0');
      any = true;
      ++pos;
    }
    if (!any)
      throw IoError(IoErrorKind::kBadHeader,
                    path.string() + ": expected a number at byte offset " +
                        std::to_string(pos));
    return value;
  };

  PgmImage image;
  image.width = next_token();
  image.height = next_token();
  const std::size_t maxval = next_token();
  if (maxval == 0 || maxval > 255)
    throw IoError(IoErrorKind::kBadHeader,
                  path.string() + ": unsupported PGM maxval " +
                      std::to_string(maxval));
  image.maxval = static_cast<int>(maxval);
  if (image.width == 0 || image.height == 0)
    throw IoError(IoErrorKind::kShapeMismatch,
                  path.string() + ": PGM has an empty dimension");
  ++pos;  // single whitespace after maxval
  const std::size_t expected = image.width * image.height;
  if (bytes.size() < pos || bytes.size() - pos != expected)
    throw IoError(IoErrorKind::kTruncated,
                  path.string() + ": PGM payload holds " +
                      std::to_string(bytes.size() - std::min(pos, bytes.size())) +
                      " bytes at offset " + std::to_string(pos) +
                      ", expected " + std::to_string(expected));
  image.pixels.resize(expected);
  std::memcpy(image.pixels.data(), bytes.data() + pos, expected);
  return image;
}

std::int32_t infer_class_count(std::span<const std::int32_t> values,
                               const std::optional<std::int32_t>& ignore_id) {
  std::int32_t max_id = -1;
  for (std::int32_t v : values) {
    if (ignore_id && v == *ignore_id) continue;
    max_id = std::max(max_id, v);
  }
  return std::max<std::int32_t>(max_id + 1, 2);
}

}  // namespace

std::size_t dtype_size(Dtype dtype) {
  switch (dtype) {
    case Dtype::kU8: return 1;
    case Dtype::kI32: return 4;
    case Dtype::kF32: return 4;
    case Dtype::kF64: return 8;
  }
  return 0;
}

std::size_t RawTensor::element_size() const { return dtype_size(dtype); }

std::size_t RawTensor::element_count() const {
  std::size_t count = 1;
  for (std::uint32_t d : dims) count *= d;
  return count;
}

RawTensor read_uet(const std::filesystem::path& path) {
  return parse_uet(read_file(path), path);
}

void write_uet(const std::filesystem::path& path, const RawTensor& tensor) {
  if (tensor.dims.empty() || tensor.dims.size() > 8)
    throw IoError(IoErrorKind::kShapeMismatch,
                  "refusing to write tensor of rank " +
                      std::to_string(tensor.dims.size()));
  for (std::size_t i = 0; i < tensor.dims.size(); ++i) {
    if (tensor.dims[i] == 0)
      throw IoError(IoErrorKind::kShapeMismatch,
                    "refusing to write tensor with empty dimension " +
                        std::to_string(i));
  }
  if (tensor.payload.size() != tensor.element_count() * tensor.element_size())
    throw IoError(IoErrorKind::kShapeMismatch,
                  "payload size " + std::to_string(tensor.payload.size()) +
                      " does not match dims");

  std::vector<std::byte> bytes(6 + 4 * tensor.dims.size() +
                               tensor.payload.size());
  std::memcpy(bytes.data(), kMagic, sizeof(kMagic));
  bytes[4] = static_cast<std::byte>(tensor.dtype);
  bytes[5] = static_cast<std::byte>(tensor.dims.size());
  for (std::size_t i = 0; i < tensor.dims.size(); ++i)
    store_u32_le(tensor.dims[i], bytes.data() + 6 + 4 * i);
  std::copy(tensor.payload.begin(), tensor.payload.end(),
            bytes.begin() + 6 + 4 * static_cast<std::ptrdiff_t>(tensor.dims.size()));
  write_file(path, bytes);
}

PgmImage read_pgm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (!is_pgm(bytes))
    throw IoError(IoErrorKind::kBadMagic,
                  path.string() + ": bad magic at byte offset 0, expected P5");
  return parse_pgm(bytes, path);
}

void write_pgm(const std::filesystem::path& path, const PgmImage& image) {
  if (image.height == 0 || image.width == 0)
    throw IoError(IoErrorKind::kShapeMismatch,
                  "refusing to write PGM with an empty dimension");
  if (image.maxval <= 0 || image.maxval > 255)
    throw IoError(IoErrorKind::kBadHeader,
                  "PGM maxval must lie in [1, 255]");
  if (image.pixels.size() != image.height * image.width)
    throw IoError(IoErrorKind::kShapeMismatch,
                  "PGM pixel count does not match dimensions");
  std::string header = "P5\n" + std::to_string(image.width) + " " +
                       std::to_string(image.height) + "\n" +
                       std::to_string(image.maxval) + "\n";
  std::vector<std::byte> bytes(header.size() + image.pixels.size());
  std::memcpy(bytes.data(), header.data(), header.size());
  std::memcpy(bytes.data() + header.size(), image.pixels.data(),
              image.pixels.size());
  write_file(path, bytes);
}

void write_tensor(const ClassMap& map, const std::filesystem::path& path) {
  write_uet(path,
            encode_payload<std::int32_t>(
                Dtype::kI32,
                {static_cast<std::uint32_t>(map.height()),
                 static_cast<std::uint32_t>(map.width())},
                map.values()));
}

void write_tensor(const ScalarMap& map, const std::filesystem::path& path) {
  write_uet(path, encode_payload<double>(
                      Dtype::kF64,
                      {static_cast<std::uint32_t>(map.height()),
                       static_cast<std::uint32_t>(map.width())},
                      map.values()));
}

void write_tensor(const ProbStack& stack, const std::filesystem::path& path) {
  write_uet(path, encode_payload<double>(
                      Dtype::kF64,
                      {static_cast<std::uint32_t>(stack.samples()),
                       static_cast<std::uint32_t>(stack.class_count()),
                       static_cast<std::uint32_t>(stack.height()),
                       static_cast<std::uint32_t>(stack.width())},
                      stack.values()));
}

ClassMap read_class_map(const std::filesystem::path& path,
                        const TensorReadOptions& options) {
  const auto bytes = read_file(path);
  std::vector<std::int32_t> values;
  std::size_t height, width;
  if (is_pgm(bytes)) {
    const PgmImage image = parse_pgm(bytes, path);
    height = image.height;
    width = image.width;
    values.assign(image.pixels.begin(), image.pixels.end());
  } else {
    const RawTensor raw = parse_uet(bytes, path);
    if (raw.dims.size() != 2)
      throw IoError(IoErrorKind::kShapeMismatch,
                    path.string() + ": class map needs rank 2, file has rank " +
                        std::to_string(raw.dims.size()));
    if (raw.dtype != Dtype::kU8 && raw.dtype != Dtype::kI32)
      throw IoError(IoErrorKind::kDtypeMismatch,
                    path.string() + ": class map needs an integer dtype");
    height = raw.dims[0];
    width = raw.dims[1];
    values = decode_payload<std::int32_t>(raw);
  }
  const std::int32_t classes =
      options.class_count ? *options.class_count
                          : infer_class_count(values, options.ignore_id);
  ClassMap map(height, width, classes, std::move(values), options.ignore_id);
  if (const auto report = validate_class_map(map))
    throw_invariant(*report, path);
  return map;
}

ScalarMap read_scalar_map(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::vector<double> values;
  std::size_t height, width;
  if (is_pgm(bytes)) {
    const PgmImage image = parse_pgm(bytes, path);
    height = image.height;
    width = image.width;
    values.resize(image.pixels.size());
    const double scale = 1.0 / static_cast<double>(image.maxval);
    for (std::size_t i = 0; i < image.pixels.size(); ++i)
      values[i] = static_cast<double>(image.pixels[i]) * scale;
  } else {
    const RawTensor raw = parse_uet(bytes, path);
    if (raw.dims.size() != 2)
      throw IoError(IoErrorKind::kShapeMismatch,
                    path.string() +
                        ": scalar map needs rank 2, file has rank " +
                        std::to_string(raw.dims.size()));
    if (raw.dtype != Dtype::kF32 && raw.dtype != Dtype::kF64)
      throw IoError(IoErrorKind::kDtypeMismatch,
                    path.string() + ": scalar map needs a float dtype");
    height = raw.dims[0];
    width = raw.dims[1];
    values = decode_payload<double>(raw);
  }
  ScalarMap map(height, width, std::move(values));
  if (const auto report = validate_scalar_map(map))
    throw_invariant(*report, path);
  return map;
}

ProbStack read_prob_stack(const std::filesystem::path& path) {
  const RawTensor raw = read_uet(path);
  if (raw.dims.size() != 4)
    throw IoError(IoErrorKind::kShapeMismatch,
                  path.string() +
                      ": probability stack needs rank 4 (T,C,H,W), file has "
                      "rank " +
                      std::to_string(raw.dims.size()));
  if (raw.dtype != Dtype::kF32 && raw.dtype != Dtype::kF64)
    throw IoError(IoErrorKind::kDtypeMismatch,
                  path.string() + ": probability stack needs a float dtype");
  ProbStack stack(raw.dims[0], static_cast<std::int32_t>(raw.dims[1]),
                  raw.dims[2], raw.dims[3], decode_payload<double>(raw));
  if (const auto report = validate_prob_stack(stack))
    throw_invariant(*report, path);
  return stack;
}

AnyTensor read_tensor(const std::filesystem::path& path,
                      const TensorReadOptions& options) {
  const auto bytes = read_file(path);
  if (is_pgm(bytes)) {
    if (options.pgm_as_scalar) return read_scalar_map(path);
    return read_class_map(path, options);
  }
  const RawTensor raw = parse_uet(bytes, path);
  if (raw.dims.size() == 4) return read_prob_stack(path);
  if (raw.dims.size() == 2) {
    if (raw.dtype == Dtype::kU8 || raw.dtype == Dtype::kI32)
      return read_class_map(path, options);
    return read_scalar_map(path);
  }
  throw IoError(IoErrorKind::kShapeMismatch,
                path.string() + ": no tensor type has rank " +
                    std::to_string(raw.dims.size()));
}

}  // namespace ueval
