#include "asa/wav.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "asa/util.hpp"

namespace asa {

namespace {

uint32_t rd_u32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}
uint16_t rd_u16(const uint8_t* p) { return uint16_t(p[0]) | uint16_t(p[1]) << 8; }

void wr_u32(std::ostream& out, uint32_t v) {
  char b[4] = {char(v & 0xff), char(v >> 8 & 0xff), char(v >> 16 & 0xff), char(v >> 24 & 0xff)};
  out.write(b, 4);
}
void wr_u16(std::ostream& out, uint16_t v) {
  char b[2] = {char(v & 0xff), char(v >> 8 & 0xff)};
  out.write(b, 2);
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "wav: cannot open ", path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  require(bytes.size() >= 44, "wav ", path.string(), ": file too short");
  require(std::memcmp(bytes.data(), "RIFF", 4) == 0 && std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
          "wav ", path.string(), ": not a RIFF/WAVE file");

  int sample_rate = 0, channels = 0, bits = 0;
  bool have_fmt = false;
  AudioBuffer audio;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
    uint32_t chunk_len = rd_u32(bytes.data() + pos + 4);
    size_t body = pos + 8;
    require(body + chunk_len <= bytes.size(), "wav ", path.string(), ": truncated chunk");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      require(chunk_len >= 16, "wav ", path.string(), ": short fmt chunk");
      uint16_t format = rd_u16(bytes.data() + body);
      channels = rd_u16(bytes.data() + body + 2);
      sample_rate = int(rd_u32(bytes.data() + body + 4));
      bits = rd_u16(bytes.data() + body + 14);
      require(format == 1, "wav ", path.string(), ": only PCM supported (format ", format, ")");
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      require(have_fmt, "wav ", path.string(), ": data chunk before fmt");
      require(channels == 1, "wav ", path.string(), ": expected mono, got ", channels,
              " channels");
      require(bits == 16, "wav ", path.string(), ": expected 16-bit PCM, got ", bits, " bits");
      require(sample_rate >= 8000 && sample_rate <= 48000, "wav ", path.string(),
              ": sample rate ", sample_rate, " outside 8000..48000");
      size_t n = chunk_len / 2;
      audio.sample_rate = sample_rate;
      audio.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        int16_t s = int16_t(rd_u16(bytes.data() + body + 2 * i));
        audio.samples[i] = float(s) / 32768.0f;
      }
      return audio;
    }
    pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }
  throw Error(msg("wav ", path.string(), ": no data chunk"));
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  require(audio.sample_rate >= 8000 && audio.sample_rate <= 48000,
          "wav: sample rate ", audio.sample_rate, " outside 8000..48000");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "wav: cannot write ", path.string());
  const uint32_t data_len = uint32_t(audio.samples.size() * 2);
  out.write("RIFF", 4);
  wr_u32(out, 36 + data_len);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  wr_u32(out, 16);
  wr_u16(out, 1);  // PCM
  wr_u16(out, 1);  // mono
  wr_u32(out, uint32_t(audio.sample_rate));
  wr_u32(out, uint32_t(audio.sample_rate) * 2);
  wr_u16(out, 2);
  wr_u16(out, 16);
  out.write("data", 4);
  wr_u32(out, data_len);
  for (float s : audio.samples) {
    float c = std::clamp(s, -1.0f, 1.0f);
    wr_u16(out, uint16_t(int16_t(std::lround(c * 32767.0f))));
  }
  require(out.good(), "wav: write failed: ", path.string());
}

}  // namespace asa
