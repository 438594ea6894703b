#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ueval/tensor.hpp"

namespace ueval {

/// On-disk element types of the UET container.
enum class Dtype : std::uint8_t { kU8 = 0, kI32 = 1, kF32 = 2, kF64 = 3 };

enum class IoErrorKind {
  kBadMagic,
  kTruncated,
  kBadHeader,
  kDtypeMismatch,
  kShapeMismatch,
  kInvariantViolation,
  kFileSystem,
};

class IoError : public std::runtime_error {
 public:
  IoError(IoErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  IoErrorKind kind() const { return kind_; }

 private:
  IoErrorKind kind_;
};

/// Container-level view of a UET file:
///   magic "UET1" | dtype u8 | rank u8 | rank x u32 little-endian dims |
///   row-major payload, little-endian.
struct RawTensor {
  Dtype dtype = Dtype::kF64;
  std::vector<std::uint32_t> dims;
  std::vector<std::byte> payload;

  std::size_t element_count() const;
  std::size_t element_size() const;
};

std::size_t dtype_size(Dtype dtype);

RawTensor read_uet(const std::filesystem::path& path);
void write_uet(const std::filesystem::path& path, const RawTensor& tensor);

/// Binary 8-bit P5 image. maxval above 255 is not supported.
struct PgmImage {
  std::size_t height = 0;
  std::size_t width = 0;
  int maxval = 255;
  std::vector<std::uint8_t> pixels;
};

PgmImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const PgmImage& image);

/// ClassMap -> rank-2 i32, ScalarMap -> rank-2 f64, ProbStack -> rank-4 f64
/// with dims (T, C, H, W). Values round-trip bit-exactly.
void write_tensor(const ClassMap& map, const std::filesystem::path& path);
void write_tensor(const ScalarMap& map, const std::filesystem::path& path);
void write_tensor(const ProbStack& stack, const std::filesystem::path& path);

struct TensorReadOptions {
  /// Class count for class maps; inferred as max(value)+1 (at least 2) when
  /// absent, since neither UET nor PGM headers carry it.
  std::optional<std::int32_t> class_count;
  std::optional<std::int32_t> ignore_id;
  /// Read a PGM as a ScalarMap (values scaled by 1/maxval) instead of a
  /// ClassMap.
  bool pgm_as_scalar = false;
};

/// Readers sniff the container from the leading magic bytes and accept
/// either a UET tensor of the matching rank/dtype family or a P5 PGM where
/// noted. All loads validate module invariants and throw IoError with
/// kInvariantViolation naming the first offending pixel.
ClassMap read_class_map(const std::filesystem::path& path,
                        const TensorReadOptions& options = {});
ScalarMap read_scalar_map(const std::filesystem::path& path);
ProbStack read_prob_stack(const std::filesystem::path& path);

using AnyTensor = std::variant<ClassMap, ProbStack, ScalarMap>;

/// Type-dispatching load: rank-2 integer payloads (and PGM, by default)
/// become class maps, rank-2 float payloads scalar maps, rank-4 float
/// payloads probability stacks.
AnyTensor read_tensor(const std::filesystem::path& path,
                      const TensorReadOptions& options = {});

}  // namespace ueval
