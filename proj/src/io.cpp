#include "seld/io.hpp"

#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "seld/errors.hpp"

namespace seld {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "tensor and WAV I/O assume a little-endian host");

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  static std::atomic<unsigned> counter{0};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(tmp.string() + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error(tmp.string() + ": write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error(path.string() + ": rename failed: " + ec.message());
  }
}

// ---------------------------------------------------------------------------
// WAV
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T load_le(const std::string& buf, std::size_t off) {
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

template <typename T>
void append_le(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

}  // namespace

FoaClip read_foa_wav(const fs::path& path) {
  const std::string buf = read_file(path);
  const std::string name = path.string();
  auto fail = [&](const std::string& msg, std::size_t offset) {
    return FormatError(name + ": byte " + std::to_string(offset) + ": " + msg);
  };
  if (buf.size() < 12 || buf.compare(0, 4, "RIFF") != 0 || buf.compare(8, 4, "WAVE") != 0) {
    throw fail("not a RIFF/WAVE file", 0);
  }

  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string id = buf.substr(pos, 4);
    const auto len = load_le<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (len < 16 || body + len > buf.size()) throw fail("truncated fmt chunk", pos);
      format = load_le<std::uint16_t>(buf, body);
      channels = load_le<std::uint16_t>(buf, body + 2);
      rate = load_le<std::uint32_t>(buf, body + 4);
      block_align = load_le<std::uint16_t>(buf, body + 12);
      bits = load_le<std::uint16_t>(buf, body + 14);
      if (format == kFormatExtensible) {
        if (len < 40) throw fail("truncated WAVE_FORMAT_EXTENSIBLE header", pos);
        format = load_le<std::uint16_t>(buf, body + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      if (body + len > buf.size()) throw fail("truncated data chunk", pos);
      data_off = body;
      data_len = len;
      have_data = true;
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt) throw fail("missing fmt chunk", 12);
  if (!have_data) throw fail("missing data chunk", 12);
  if (channels != kNumFoaChannels) {
    throw fail("expected 4 channels, found " + std::to_string(channels), 22);
  }
  if (rate != static_cast<std::uint32_t>(kSampleRate)) {
    throw fail("expected 24000 Hz, found " + std::to_string(rate), 24);
  }
  const bool pcm = format == kFormatPcm && (bits == 16 || bits == 24);
  const bool flt = format == kFormatFloat && bits == 32;
  if (!pcm && !flt) {
    throw fail("unsupported sample format (tag " + std::to_string(format) + ", " +
                   std::to_string(bits) + " bits)",
               20);
  }
  const std::size_t bytes_per_sample = bits / 8;
  if (block_align != bytes_per_sample * channels) throw fail("inconsistent block align", 32);
  if (data_len % block_align != 0) throw fail("data size not a whole number of frames", data_off);

  const std::size_t n = data_len / block_align;
  FoaClip clip = FoaClip::zeros(n);
  std::size_t off = data_off;
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < kNumFoaChannels; ++c, off += bytes_per_sample) {
      float v = 0.0f;
      if (flt) {
        v = load_le<float>(buf, off);
        if (!std::isfinite(v)) throw fail("non-finite float sample", off);
      } else if (bits == 16) {
        v = static_cast<float>(load_le<std::int16_t>(buf, off)) / 32768.0f;
      } else {
        const auto b0 = static_cast<std::uint8_t>(buf[off]);
        const auto b1 = static_cast<std::uint8_t>(buf[off + 1]);
        const auto b2 = static_cast<std::uint8_t>(buf[off + 2]);
        std::int32_t s = static_cast<std::int32_t>(b0 | (b1 << 8) | (b2 << 16));
        if (s & 0x800000) s -= 0x1000000;
        v = static_cast<float>(s) / 8388608.0f;
      }
      clip.samples[c][i] = v;
    }
  }
  return clip;
}

void write_foa_wav(const fs::path& path, const FoaClip& clip) {
  clip.validate();
  const std::size_t n = clip.num_samples();
  const std::uint32_t data_len = static_cast<std::uint32_t>(n * kNumFoaChannels * 4);
  std::string buf;
  buf.reserve(44 + data_len);
  buf += "RIFF";
  append_le<std::uint32_t>(buf, 36 + data_len);
  buf += "WAVEfmt ";
  append_le<std::uint32_t>(buf, 16);
  append_le<std::uint16_t>(buf, kFormatFloat);
  append_le<std::uint16_t>(buf, kNumFoaChannels);
  append_le<std::uint32_t>(buf, kSampleRate);
  append_le<std::uint32_t>(buf, kSampleRate * kNumFoaChannels * 4);
  append_le<std::uint16_t>(buf, kNumFoaChannels * 4);
  append_le<std::uint16_t>(buf, 32);
  buf += "data";
  append_le<std::uint32_t>(buf, data_len);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < kNumFoaChannels; ++c) append_le<float>(buf, clip.samples[c][i]);
  }
  write_file_atomic(path, buf);
}

// ---------------------------------------------------------------------------
// Metadata CSV
// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end && !field.empty();
}

void append_double(std::string& out, double v) {
  char tmp[64];
  auto [ptr, ec] = std::to_chars(tmp, tmp + sizeof(tmp), v);
  out.append(tmp, ptr);
}

}  // namespace

MetadataTable parse_metadata_csv(std::istream& in, std::string_view source_name) {
  std::vector<EventAnnotation> rows;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    return FormatError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      fields.push_back(view.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 6) {
      throw fail("expected 6 fields, found " + std::to_string(fields.size()));
    }
    EventAnnotation e;
    double distance_cm = 0.0;
    if (!parse_number(fields[0], e.frame)) throw fail("frame is not an integer");
    if (!parse_number(fields[1], e.class_id)) throw fail("class is not an integer");
    if (!parse_number(fields[2], e.source_id)) throw fail("source is not an integer");
    if (!parse_number(fields[3], e.azimuth)) throw fail("azimuth is not numeric");
    if (!parse_number(fields[4], e.elevation)) throw fail("elevation is not numeric");
    if (!parse_number(fields[5], distance_cm)) throw fail("distance is not numeric");
    if (e.azimuth == -180.0) e.azimuth = 180.0;
    e.distance = distance_cm / 100.0;
    try {
      e.validate();
    } catch (const DomainError& err) {
      throw fail(err.what());
    }
    rows.push_back(e);
  }
  try {
    return MetadataTable(std::move(rows));
  } catch (const DataError& err) {
    throw FormatError(std::string(source_name) + ": " + err.what());
  }
}

MetadataTable read_metadata_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string() + ": cannot open for reading");
  return parse_metadata_csv(in, path.string());
}

std::string format_metadata_csv(const MetadataTable& table) {
  std::string out;
  for (const auto& r : table.rows()) {
    out += std::to_string(r.frame);
    out += ',';
    out += std::to_string(r.class_id);
    out += ',';
    out += std::to_string(r.source_id);
    out += ',';
    append_double(out, r.azimuth);
    out += ',';
    append_double(out, r.elevation);
    out += ',';
    out += std::to_string(std::llround(r.distance * 100.0));
    out += '\n';
  }
  return out;
}

void write_metadata_csv(const MetadataTable& table, const fs::path& path) {
  write_file_atomic(path, format_metadata_csv(table));
}

// ---------------------------------------------------------------------------
// Tensors
// ---------------------------------------------------------------------------

std::size_t TensorFile::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

fs::path sidecar_path(const fs::path& tensor_path) {
  fs::path p = tensor_path;
  p += ".json";
  return p;
}

void write_tensor(const fs::path& path, const TensorFile& tensor) {
  if (tensor.shape.empty()) throw FormatError(path.string() + ": tensor has empty shape");
  if (tensor.element_count() != tensor.payload.size()) {
    throw FormatError(path.string() + ": shape does not match payload length");
  }
  for (float v : tensor.payload) {
    if (!std::isfinite(v)) throw DomainError(path.string() + ": non-finite tensor value");
  }
  nlohmann::ordered_json header;
  header["shape"] = tensor.shape;
  header["dtype"] = "float32le";
  header["sample_rate"] = tensor.sample_rate;
  header["hop_ms"] = tensor.hop_ms;
  header["channel_names"] = tensor.channel_names;
  const auto* bytes = reinterpret_cast<const char*>(tensor.payload.data());
  write_file_atomic(path, std::string_view(bytes, tensor.payload.size() * sizeof(float)));
  write_file_atomic(sidecar_path(path), header.dump(2) + "\n");
}

TensorFile read_tensor(const fs::path& path) {
  const fs::path side = sidecar_path(path);
  TensorFile t;
  try {
    const auto header = nlohmann::json::parse(read_file(side));
    t.shape = header.at("shape").get<std::vector<std::size_t>>();
    if (header.contains("dtype") && header["dtype"] != "float32le") {
      throw FormatError(side.string() + ": unsupported dtype");
    }
    t.sample_rate = header.value("sample_rate", kSampleRate);
    t.hop_ms = header.value("hop_ms", kHopMs);
    t.channel_names = header.value("channel_names", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(side.string() + ": invalid sidecar: " + e.what());
  }
  if (t.shape.empty()) throw FormatError(side.string() + ": empty shape");
  const std::string payload = read_file(path);
  const std::size_t expected = t.element_count() * sizeof(float);
  if (payload.size() != expected) {
    throw FormatError(path.string() + ": payload is " + std::to_string(payload.size()) +
                      " bytes, header implies " + std::to_string(expected));
  }
  t.payload.resize(t.element_count());
  std::memcpy(t.payload.data(), payload.data(), payload.size());
  return t;
}

}  // namespace seld
