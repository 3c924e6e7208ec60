#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace wavlink::io {

// little-endian primitives, written byte by byte so files are
// platform-independent

void write_u16(std::ostream& os, uint16_t v);
void write_u32(std::ostream& os, uint32_t v);
void write_u64(std::ostream& os, uint64_t v);
void write_f64(std::ostream& os, double v);
void write_string(std::ostream& os, const std::string& s); // u32 length prefix
void write_f64_array(std::ostream& os, const std::vector<double>& v);

uint16_t read_u16(std::istream& is);
uint32_t read_u32(std::istream& is);
uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
std::string read_string(std::istream& is);
std::vector<double> read_f64_array(std::istream& is, size_t n);

void expect_magic(std::istream& is, const char magic[4], const std::string& what);

std::ofstream open_out(const std::string& path);
std::ifstream open_in(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace wavlink::io
