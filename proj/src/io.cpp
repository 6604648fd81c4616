#include "grbm/io.hpp"

#include <zlib.h>

#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace grbm {

namespace {

static_assert(std::numeric_limits<double>::is_iec559, "IEEE-754 doubles required");

class Writer {
 public:
  void bytes(const char* s, std::size_t n) { out_.insert(out_.end(), s, s + n); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double x) {
    const auto v = std::bit_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::size_t size() const { return out_.size(); }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }
  std::uint16_t u16() {
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> payload) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed in chunks to stay portable for large payloads.
  std::size_t off = 0;
  while (off < payload.size()) {
    const std::size_t n = std::min<std::size_t>(payload.size() - off, 1u << 30);
    crc = crc32(crc, payload.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

constexpr std::size_t kHeaderBytes = 4 + 2 + 4 + 4;

void check_payload(std::span<const std::uint8_t> bytes, std::size_t payload_doubles,
                   const char* what) {
  const std::size_t expected = kHeaderBytes + 8 * payload_doubles + 4;
  if (bytes.size() < expected) {
    throw FormatError(FormatErrorKind::truncated_payload,
                      std::string(what) + " payload is truncated (" + std::to_string(bytes.size()) +
                          " of " + std::to_string(expected) + " bytes)");
  }
  if (bytes.size() > expected) {
    throw FormatError(FormatErrorKind::malformed_header,
                      std::string(what) + " file has trailing bytes after the checksum");
  }
  const auto payload = bytes.subspan(kHeaderBytes, 8 * payload_doubles);
  Reader crc_reader(bytes.subspan(kHeaderBytes + 8 * payload_doubles));
  if (crc_reader.u32() != crc_of(payload)) {
    throw FormatError(FormatErrorKind::checksum_mismatch,
                      std::string(what) + " payload checksum mismatch");
  }
}

struct Dims {
  std::uint32_t first = 0;
  std::uint32_t second = 0;
};

Dims parse_header(std::span<const std::uint8_t> bytes, const char* magic, std::uint16_t version,
                  const char* what) {
  if (bytes.size() < kHeaderBytes) {
    throw FormatError(FormatErrorKind::malformed_header,
                      std::string(what) + " file is too short to hold a header");
  }
  if (std::memcmp(bytes.data(), magic, 4) != 0) {
    throw FormatError(FormatErrorKind::malformed_header,
                      std::string(what) + " file has the wrong magic bytes");
  }
  Reader r(bytes.subspan(4));
  const std::uint16_t v = r.u16();
  if (v != version) {
    throw FormatError(FormatErrorKind::malformed_header,
                      std::string(what) + " format version " + std::to_string(v) +
                          " is not supported");
  }
  Dims d;
  d.first = r.u32();
  d.second = r.u32();
  if (d.first == 0 || d.second == 0) {
    throw FormatError(FormatErrorKind::malformed_header,
                      std::string(what) + " header has a zero dimension");
  }
  return d;
}

void finish(Writer& w) {
  const auto payload = std::span<const std::uint8_t>(w.data()).subspan(kHeaderBytes);
  w.u32(crc_of(payload));
}

template <typename T>
std::uint32_t checked_u32(T v, const char* what) {
  if (v < 0 || static_cast<std::uint64_t>(v) > std::numeric_limits<std::uint32_t>::max()) {
    throw ContractError(std::string(what) + " does not fit the file format");
  }
  return static_cast<std::uint32_t>(v);
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::uint8_t> encode_model(const GrbmParams& p) {
  p.validate();
  const Index m = p.num_visible();
  const Index n = p.num_hidden();
  Writer w;
  w.bytes("GRBM", 4);
  w.u16(kModelFormatVersion);
  w.u32(checked_u32(m, "visible count"));
  w.u32(checked_u32(n, "hidden count"));
  w.f64(p.sigma);
  for (Index i = 0; i < m; ++i) w.f64(p.visible_bias[i]);
  for (Index j = 0; j < n; ++j) w.f64(p.hidden_bias[j]);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) w.f64(p.weights(i, j));
  }
  finish(w);
  return std::move(w.data());
}

GrbmParams decode_model(std::span<const std::uint8_t> bytes) {
  const Dims d = parse_header(bytes, "GRBM", kModelFormatVersion, "model");
  const std::size_t m = d.first;
  const std::size_t n = d.second;
  check_payload(bytes, m * n + m + n + 1, "model");
  Reader r(bytes.subspan(kHeaderBytes));
  GrbmParams p;
  p.sigma = r.f64();
  p.visible_bias.resize(static_cast<Index>(m));
  p.hidden_bias.resize(static_cast<Index>(n));
  p.weights.resize(static_cast<Index>(m), static_cast<Index>(n));
  for (std::size_t i = 0; i < m; ++i) p.visible_bias[static_cast<Index>(i)] = r.f64();
  for (std::size_t j = 0; j < n; ++j) p.hidden_bias[static_cast<Index>(j)] = r.f64();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) p.weights(static_cast<Index>(i), static_cast<Index>(j)) = r.f64();
  }
  if (!(p.sigma > 0.0) || !p.all_finite()) {
    throw DataError("model file holds invalid parameters (non-finite values or sigma <= 0)");
  }
  return p;
}

std::vector<std::uint8_t> encode_batch(const DataBatch& d) {
  Writer w;
  w.bytes("GDAT", 4);
  w.u16(kBatchFormatVersion);
  w.u32(checked_u32(d.rows(), "sample count"));
  w.u32(checked_u32(d.cols(), "dimension"));
  for (Index l = 0; l < d.rows(); ++l) {
    for (Index i = 0; i < d.cols(); ++i) w.f64(d(l, i));
  }
  finish(w);
  return std::move(w.data());
}

DataBatch decode_batch(std::span<const std::uint8_t> bytes) {
  const Dims dims = parse_header(bytes, "GDAT", kBatchFormatVersion, "dataset");
  const std::size_t rows = dims.first;
  const std::size_t cols = dims.second;
  check_payload(bytes, rows * cols, "dataset");
  Reader r(bytes.subspan(kHeaderBytes));
  DataBatch d(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t l = 0; l < rows; ++l) {
    for (std::size_t i = 0; i < cols; ++i) d(static_cast<Index>(l), static_cast<Index>(i)) = r.f64();
  }
  return d;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("failed reading " + path.string());
  return bytes;
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void save_model(const GrbmParams& p, const std::filesystem::path& path) {
  write_file_bytes(path, encode_model(p));
}

GrbmParams load_model(const std::filesystem::path& path) { return decode_model(read_file_bytes(path)); }

void save_batch(const DataBatch& d, const std::filesystem::path& path) {
  write_file_bytes(path, encode_batch(d));
}

DataBatch load_batch(const std::filesystem::path& path) { return decode_batch(read_file_bytes(path)); }

void save_batch_csv(const DataBatch& d, const std::filesystem::path& path) {
  std::string text;
  for (Index l = 0; l < d.rows(); ++l) {
    for (Index i = 0; i < d.cols(); ++i) {
      if (i > 0) text += ',';
      text += format_double(d(l, i));
    }
    text += '\n';
  }
  write_text_file(path, text);
}

DataBatch parse_batch_csv(const std::string& text) {
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::size_t line_start = 0;
  std::size_t line_no = 0;
  while (line_start < text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string::npos) line_end = text.size();
    ++line_no;
    std::string_view line(text.data() + line_start, line_end - line_start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    line_start = line_end + 1;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    Index count = 0;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      std::string_view field = line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos);
      while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
      while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
      if (!field.empty() && field.front() == '+') field.remove_prefix(1);
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw DataError("CSV line " + std::to_string(line_no) + ": cannot parse value '" +
                        std::string(field) + "'");
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (cols < 0) cols = count;
    if (count != cols) {
      throw DataError("CSV line " + std::to_string(line_no) + " has " + std::to_string(count) +
                      " values, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw DataError("CSV input holds no samples");
  DataBatch d(rows, cols);
  std::copy(values.begin(), values.end(), d.data());
  return d;
}

DataBatch load_batch_csv(const std::filesystem::path& path) {
  return parse_batch_csv(read_text_file(path));
}

DataBatch load_batch_any(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? load_batch_csv(path) : load_batch(path);
}

void save_batch_any(const DataBatch& d, const std::filesystem::path& path) {
  if (path.extension() == ".csv") {
    save_batch_csv(d, path);
  } else {
    save_batch(d, path);
  }
}

Image parse_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) {
    skip_space();
    std::uint64_t v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1u << 30)) throw DataError(std::string("PGM ") + what + " is too large");
      ++pos;
    }
    if (pos == start) throw DataError(std::string("PGM header: missing ") + what);
    return static_cast<Index>(v);
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
    throw DataError("not a grayscale PGM (expected P5 or P2 magic)");
  }
  const bool binary = bytes[1] == '5';
  pos = 2;
  const Index width = read_uint("width");
  const Index height = read_uint("height");
  const Index maxval = read_uint("maxval");
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) {
    throw DataError("PGM header has invalid dimensions or maxval");
  }

  Image img(height, width);
  if (binary) {
    ++pos;  // single whitespace after maxval
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    const std::size_t need = static_cast<std::size_t>(width * height) * bpp;
    if (pos > bytes.size() || bytes.size() - pos < need) throw DataError("PGM pixel data is truncated");
    for (Index r = 0; r < height; ++r) {
      for (Index c = 0; c < width; ++c) {
        unsigned v = bytes[pos];
        if (bpp == 2) v = (v << 8) | bytes[pos + 1];  // 16-bit PGM is big endian
        pos += bpp;
        img(r, c) = static_cast<double>(v);
      }
    }
  } else {
    for (Index r = 0; r < height; ++r) {
      for (Index c = 0; c < width; ++c) img(r, c) = static_cast<double>(read_uint("pixel value"));
    }
  }
  return img;
}

Image load_pgm(const std::filesystem::path& path) {
  try {
    return parse_pgm(read_file_bytes(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_pgm(const Image& image, const std::filesystem::path& path) {
  const double maxv = image.size() ? image.maxCoeff() : 0.0;
  if (image.size() == 0 || image.minCoeff() < 0.0 || maxv > 65535.0) {
    throw ContractError("PGM pixels must lie in [0, 65535]");
  }
  const unsigned maxval = maxv < 256.0 ? 255u : 65535u;
  std::string header = "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) +
                       "\n" + std::to_string(maxval) + "\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (Index r = 0; r < image.rows(); ++r) {
    for (Index c = 0; c < image.cols(); ++c) {
      const auto v = static_cast<unsigned>(std::lround(image(r, c)));
      if (maxval > 255) bytes.push_back(static_cast<std::uint8_t>(v >> 8));
      bytes.push_back(static_cast<std::uint8_t>(v & 0xff));
    }
  }
  write_file_bytes(path, bytes);
}

Image load_image(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".pgm" || ext == ".PGM") return load_pgm(path);
  return load_batch_csv(path);
}

std::string whitening_to_json(const WhiteningTransform& t) {
  auto matrix_json = [](const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index r = 0; r < m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  nlohmann::json j;
  j["kind"] = std::string(whitening_kind_name(t.kind));
  j["mean"] = std::vector<double>(t.mean.data(), t.mean.data() + t.mean.size());
  j["forward"] = matrix_json(t.forward);
  j["inverse"] = matrix_json(t.inverse);
  return j.dump(2) + "\n";
}

WhiteningTransform whitening_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    WhiteningTransform t;
    t.kind = parse_whitening_kind(j.at("kind").get<std::string>());
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto m = static_cast<Index>(mean.size());
    t.mean = Eigen::Map<const Vector>(mean.data(), m);
    auto read_matrix = [m](const nlohmann::json& rows) {
      const auto v = rows.get<std::vector<std::vector<double>>>();
      if (static_cast<Index>(v.size()) != m) throw DataError("whitening matrix has the wrong row count");
      Matrix out(m, m);
      for (Index r = 0; r < m; ++r) {
        if (static_cast<Index>(v[r].size()) != m) throw DataError("whitening matrix is not square");
        for (Index c = 0; c < m; ++c) out(r, c) = v[r][c];
      }
      return out;
    };
    t.forward = read_matrix(j.at("forward"));
    t.inverse = read_matrix(j.at("inverse"));
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid whitening JSON: ") + e.what());
  } catch (const ContractError& e) {
    throw DataError(std::string("invalid whitening JSON: ") + e.what());
  }
}

void save_whitening(const WhiteningTransform& t, const std::filesystem::path& path) {
  write_text_file(path, whitening_to_json(t));
}

WhiteningTransform load_whitening(const std::filesystem::path& path) {
  return whitening_from_json(read_text_file(path));
}

}  // namespace grbm
