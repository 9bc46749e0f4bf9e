#include "dpsrefine/wav.hpp"

#include <cstring>
#include <fstream>

namespace dpsrefine {

namespace {

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

std::uint32_t rd_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t rd_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::ofstream& f, std::uint32_t v) {
  const std::uint8_t b[4] = {static_cast<std::uint8_t>(v & 0xFF),
                             static_cast<std::uint8_t>((v >> 8) & 0xFF),
                             static_cast<std::uint8_t>((v >> 16) & 0xFF),
                             static_cast<std::uint8_t>((v >> 24) & 0xFF)};
  f.write(reinterpret_cast<const char*>(b), 4);
}
void wr_u16(std::ofstream& f, std::uint16_t v) {
  const std::uint8_t b[2] = {static_cast<std::uint8_t>(v & 0xFF),
                             static_cast<std::uint8_t>((v >> 8) & 0xFF)};
  f.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

AudioFile read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw InvalidInput(path + ": not a RIFF/WAVE file");

  FmtChunk fmt;
  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t len = rd_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size())
      throw InvalidInput(path + ": truncated chunk");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw InvalidInput(path + ": short fmt chunk");
      fmt.format = rd_u16(bytes.data() + body);
      fmt.channels = rd_u16(bytes.data() + body + 2);
      fmt.sample_rate = rd_u32(bytes.data() + body + 4);
      fmt.bits = rd_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }
  if (!have_fmt || data_off == 0) throw InvalidInput(path + ": missing fmt or data");
  if (fmt.channels == 0) throw InvalidInput(path + ": zero channels");

  const bool pcm16 = fmt.format == 1 && fmt.bits == 16;
  const bool f32 = fmt.format == 3 && fmt.bits == 32;
  if (!pcm16 && !f32)
    throw InvalidInput(path + ": unsupported encoding (need 16-bit PCM or "
                              "32-bit float)");

  const std::size_t bytes_per = fmt.bits / 8;
  const std::size_t n_total = data_len / (bytes_per * fmt.channels);

  AudioFile audio;
  audio.sample_rate = static_cast<int>(fmt.sample_rate);
  audio.channels.assign(fmt.channels, std::vector<double>(n_total));
  const std::uint8_t* p = bytes.data() + data_off;
  for (std::size_t i = 0; i < n_total; ++i) {
    for (std::uint16_t c = 0; c < fmt.channels; ++c) {
      if (pcm16) {
        const std::int16_t v = static_cast<std::int16_t>(rd_u16(p));
        audio.channels[c][i] = v / 32768.0;
        p += 2;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        audio.channels[c][i] = v;
        p += 4;
      }
    }
  }
  return audio;
}

void write_wav(const std::string& path, const AudioFile& audio) {
  if (audio.channels.empty()) throw InvalidInput("write_wav: no channels");
  const std::size_t n = audio.channels[0].size();
  for (const auto& ch : audio.channels)
    if (ch.size() != n) throw InvalidInput("write_wav: channel length mismatch");

  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot create " + path);

  const std::uint16_t C = static_cast<std::uint16_t>(audio.channels.size());
  const std::uint32_t data_len = static_cast<std::uint32_t>(n * C * 4);

  f.write("RIFF", 4);
  wr_u32(f, 4 + (8 + 16) + (8 + 4) + (8 + data_len));
  f.write("WAVE", 4);

  f.write("fmt ", 4);
  wr_u32(f, 16);
  wr_u16(f, 3);  // IEEE float
  wr_u16(f, C);
  wr_u32(f, static_cast<std::uint32_t>(audio.sample_rate));
  wr_u32(f, static_cast<std::uint32_t>(audio.sample_rate) * C * 4);
  wr_u16(f, static_cast<std::uint16_t>(C * 4));
  wr_u16(f, 32);

  f.write("fact", 4);
  wr_u32(f, 4);
  wr_u32(f, static_cast<std::uint32_t>(n));

  f.write("data", 4);
  wr_u32(f, data_len);
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint16_t c = 0; c < C; ++c) {
      const float v = static_cast<float>(audio.channels[c][i]);
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      wr_u32(f, bits);
    }
  if (!f) throw std::runtime_error("write_wav: write failed for " + path);
}

}  // namespace dpsrefine
