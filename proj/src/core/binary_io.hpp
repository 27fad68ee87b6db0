#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "core/errors.hpp"

namespace recap::binio {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  }
  template <typename T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("failed writing '" + path_.string() + "'");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw LoadError(LoadFailure::kMissingManifest, "cannot open '" + path.string() + "'");
  }
  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    T v;
    get_bytes(&v, sizeof(T));
    return v;
  }
  void get_bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw LoadError(LoadFailure::kCorruptFile, "truncated file '" + path_.string() + "'");
  }
  void expect_magic(const char (&magic)[9]) {
    char buf[8];
    get_bytes(buf, 8);
    if (std::memcmp(buf, magic, 8) != 0)
      throw LoadError(LoadFailure::kCorruptFile, "'" + path_.string() + "' has the wrong file signature");
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof())
      throw LoadError(LoadFailure::kCorruptFile, "trailing bytes in '" + path_.string() + "'");
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace recap::binio
