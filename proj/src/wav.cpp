#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "specfuse/dsp.hpp"

namespace specfuse::dsp {

namespace {

uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

void write_u16(std::ostream& out, uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(b, 2);
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open wav file: ", path.string());

    char tag[5] = {0};
    in.read(tag, 4);
    require(in.good() && std::strncmp(tag, "RIFF", 4) == 0, path.string(),
            ": not a RIFF file (bad magic)");
    read_u32(in);  // riff size, unused
    in.read(tag, 4);
    require(in.good() && std::strncmp(tag, "WAVE", 4) == 0, path.string(),
            ": RIFF container is not WAVE");

    bool have_fmt = false;
    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t sample_rate = 0;
    Waveform w;

    // Walk chunks; anything besides fmt/data is skipped.
    while (in.peek() != EOF) {
        in.read(tag, 4);
        if (!in.good()) break;
        const uint32_t chunk_size = read_u32(in);
        if (std::strncmp(tag, "fmt ", 4) == 0) {
            require(chunk_size >= 16, path.string(), ": fmt chunk too short");
            format = read_u16(in);
            channels = read_u16(in);
            sample_rate = read_u32(in);
            read_u32(in);  // byte rate
            read_u16(in);  // block align
            bits = read_u16(in);
            in.ignore(chunk_size - 16);
            have_fmt = true;
        } else if (std::strncmp(tag, "data", 4) == 0) {
            require(have_fmt, path.string(), ": data chunk before fmt chunk");
            require(format == 1, path.string(), ": unsupported format tag ", format,
                    " (only PCM=1)");
            require(channels == 1, path.string(), ": expected mono, got ", channels, " channels");
            require(bits == 16, path.string(), ": unsupported bit depth ", bits, " (only 16)");
            const size_t n = chunk_size / 2;
            w.samples.resize(n);
            std::vector<char> raw(chunk_size);
            in.read(raw.data(), chunk_size);
            require(in.gcount() == static_cast<std::streamsize>(chunk_size), path.string(),
                    ": truncated data chunk");
            for (size_t i = 0; i < n; ++i) {
                const int16_t s = static_cast<int16_t>(
                    static_cast<unsigned char>(raw[2 * i]) |
                    (static_cast<unsigned char>(raw[2 * i + 1]) << 8));
                w.samples[i] = static_cast<double>(s) / 32768.0;
            }
            w.sample_rate = static_cast<int>(sample_rate);
            return w;
        } else {
            in.ignore(chunk_size + (chunk_size & 1));
        }
    }
    raise(path.string(), ": no data chunk found");
}

void write_wav(const std::filesystem::path& path, const Waveform& w) {
    require(w.sample_rate > 0, "sample rate must be positive");
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot write wav file: ", path.string());

    const uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * 2);
    out.write("RIFF", 4);
    write_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32(out, 16);
    write_u16(out, 1);  // PCM
    write_u16(out, 1);  // mono
    write_u32(out, static_cast<uint32_t>(w.sample_rate));
    write_u32(out, static_cast<uint32_t>(w.sample_rate) * 2);
    write_u16(out, 2);   // block align
    write_u16(out, 16);  // bits
    out.write("data", 4);
    write_u32(out, data_bytes);

    for (const double x : w.samples) {
        const long q = std::lrint(x * 32768.0);
        const int16_t s = static_cast<int16_t>(std::clamp<long>(q, -32768, 32767));
        write_u16(out, static_cast<uint16_t>(s));
    }
    require(out.good(), "short write on ", path.string());
}

}  // namespace specfuse::dsp
