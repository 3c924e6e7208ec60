#include "wavlink/io.hpp"

#include "wavlink/errors.hpp"

#include <bit>
#include <cstring>

namespace wavlink::io {

namespace {

void write_le(std::ostream& os, uint64_t v, int bytes) {
    char buf[8];
    for (int i = 0; i < bytes; ++i) {
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    }
    os.write(buf, bytes);
    if (!os) throw IoError("write failed");
}

uint64_t read_le(std::istream& is, int bytes) {
    char buf[8];
    is.read(buf, bytes);
    if (!is) throw IoError("unexpected end of file");
    uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    }
    return v;
}

} // namespace

void write_u16(std::ostream& os, uint16_t v) { write_le(os, v, 2); }
void write_u32(std::ostream& os, uint32_t v) { write_le(os, v, 4); }
void write_u64(std::ostream& os, uint64_t v) { write_le(os, v, 8); }

void write_f64(std::ostream& os, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    write_le(os, bits, 8);
}

void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!os) throw IoError("write failed");
}

void write_f64_array(std::ostream& os, const std::vector<double>& v) {
    for (double x : v) write_f64(os, x);
}

uint16_t read_u16(std::istream& is) { return static_cast<uint16_t>(read_le(is, 2)); }
uint32_t read_u32(std::istream& is) { return static_cast<uint32_t>(read_le(is, 4)); }
uint64_t read_u64(std::istream& is) { return read_le(is, 8); }

double read_f64(std::istream& is) {
    const uint64_t bits = read_le(is, 8);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

std::string read_string(std::istream& is) {
    const uint32_t n = read_u32(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw IoError("unexpected end of file reading string");
    return s;
}

std::vector<double> read_f64_array(std::istream& is, size_t n) {
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = read_f64(is);
    return out;
}

void expect_magic(std::istream& is, const char magic[4], const std::string& what) {
    char buf[4];
    is.read(buf, 4);
    if (!is || std::memcmp(buf, magic, 4) != 0) {
        throw IoError(what + ": bad magic (expected " + std::string(magic, 4) + ")");
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + path);
    return os;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    return is;
}

std::string read_text_file(const std::string& path) {
    auto is = open_in(path);
    return std::string((std::istreambuf_iterator<char>(is)),
                       std::istreambuf_iterator<char>());
}

void write_text_file(const std::string& path, const std::string& text) {
    auto os = open_out(path);
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os) throw IoError("write failed: " + path);
}

} // namespace wavlink::io
