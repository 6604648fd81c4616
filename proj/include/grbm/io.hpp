#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "grbm/common.hpp"
#include "grbm/model.hpp"
#include "grbm/patches.hpp"
#include "grbm/whitening.hpp"

namespace grbm {

enum class FormatErrorKind { malformed_header, truncated_payload, checksum_mismatch };

class FormatError : public DataError {
 public:
  FormatError(FormatErrorKind kind, const std::string& what) : DataError(what), kind_(kind) {}
  FormatErrorKind kind() const { return kind_; }

 private:
  FormatErrorKind kind_;
};

inline constexpr std::uint16_t kModelFormatVersion = 1;
inline constexpr std::uint16_t kBatchFormatVersion = 1;

// Binary layouts (little endian):
//   model:   "GRBM" u16 version, u32 M, u32 N, f64 sigma, b[M], c[N], W[M*N] row-major, u32 crc
//   dataset: "GDAT" u16 version, u32 L, u32 M, f64 rows[L*M] row-major, u32 crc
// The CRC-32 covers the f64 payload only.
std::vector<std::uint8_t> encode_model(const GrbmParams& p);
GrbmParams decode_model(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_batch(const DataBatch& d);
DataBatch decode_batch(std::span<const std::uint8_t> bytes);

void save_model(const GrbmParams& p, const std::filesystem::path& path);
GrbmParams load_model(const std::filesystem::path& path);

void save_batch(const DataBatch& d, const std::filesystem::path& path);
DataBatch load_batch(const std::filesystem::path& path);

// Headerless CSV, one sample per line. Values are written with 17
// significant digits so the round trip is exact.
void save_batch_csv(const DataBatch& d, const std::filesystem::path& path);
DataBatch load_batch_csv(const std::filesystem::path& path);
DataBatch parse_batch_csv(const std::string& text);

// Picks CSV for a ".csv" extension and the binary format otherwise.
DataBatch load_batch_any(const std::filesystem::path& path);
void save_batch_any(const DataBatch& d, const std::filesystem::path& path);

// Binary (P5) or ASCII (P2) PGM with maxval up to 65535; pixels keep their
// integer values.
Image load_pgm(const std::filesystem::path& path);
Image parse_pgm(std::span<const std::uint8_t> bytes);
void save_pgm(const Image& image, const std::filesystem::path& path);

// PGM by extension, otherwise a CSV matrix.
Image load_image(const std::filesystem::path& path);

std::string whitening_to_json(const WhiteningTransform& t);
WhiteningTransform whitening_from_json(const std::string& text);
void save_whitening(const WhiteningTransform& t, const std::filesystem::path& path);
WhiteningTransform load_whitening(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace grbm
