#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace steerlab {

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> contents);

// Throws Error if the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);

// Splits on '\n'; a trailing newline does not produce an empty last line.
std::vector<std::string_view> split_lines(std::string_view text);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits by hash_hex.
std::uint64_t fnv1a64(std::string_view data) noexcept;
std::string hash_hex(std::uint64_t h);

// Little-endian binary encoding used by the model and vector files.
class ByteWriter {
 public:
  void put_bytes(std::string_view raw);
  void put_u32(std::uint32_t v);
  void put_u64(std::uint64_t v);
  void put_f64(double v);

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  std::vector<std::uint8_t> take() noexcept { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

// Throws ParseError on reads past the end.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string get_bytes(std::size_t n);
  std::uint32_t get_u32();
  std::uint64_t get_u64();
  double get_f64();

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace steerlab
