#pragma once

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prosoprobe/core.hpp"

namespace prosoprobe {

using json = nlohmann::json;

// Single-file tensor container: magic, format version, JSON header (tensor
// directory + free-form meta), then 64-byte-aligned raw tensor payloads.
// The header records an FNV-64 checksum of the payload region.
//
//   [ "PPTC" ][ u32 version ][ u64 header_bytes ][ header JSON ][ pad ]
//   [ tensor 0 ][ pad ][ tensor 1 ][ pad ] ...

inline constexpr char kTensorFileMagic[4] = {'P', 'P', 'T', 'C'};
inline constexpr uint32_t kTensorFileVersion = 1;
inline constexpr size_t kTensorAlign = 64;

struct TensorEntry {
  std::string name;
  std::vector<int64_t> shape;
  std::string dtype;  // "f32" | "f64" | "i32"
  size_t offset = 0;  // from start of payload region
  size_t bytes = 0;

  int64_t elements() const {
    int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

namespace detail {

inline size_t align_up(size_t v, size_t a) { return (v + a - 1) / a * a; }

template <class T>
constexpr const char* dtype_name() {
  if constexpr (std::is_same_v<T, float>) return "f32";
  else if constexpr (std::is_same_v<T, double>) return "f64";
  else if constexpr (std::is_same_v<T, int32_t>) return "i32";
  else static_assert(sizeof(T) == 0, "unsupported tensor dtype");
}

}  // namespace detail

class TensorFileWriter {
 public:
  template <class T>
  void add(const std::string& name, std::vector<int64_t> shape, const T* data) {
    TensorEntry e;
    e.name = name;
    e.shape = std::move(shape);
    e.dtype = detail::dtype_name<T>();
    e.bytes = static_cast<size_t>(e.elements()) * sizeof(T);
    e.offset = detail::align_up(payload_.size(), kTensorAlign);
    payload_.resize(e.offset + e.bytes);
    std::memcpy(payload_.data() + e.offset, data, e.bytes);
    entries_.push_back(std::move(e));
  }

  template <class S>
  void add(const std::string& name, const Mat<S>& m) {
    add(name, {m.rows(), m.cols()}, m.data());
  }
  template <class S>
  void add(const std::string& name, const Vec<S>& v) {
    add(name, {v.size()}, v.data());
  }

  void set_meta(json meta) { meta_ = std::move(meta); }

  void write(const std::string& path) const {
    json header;
    header["meta"] = meta_;
    header["checksum"] = hex64(fnv1a(payload_.data(), payload_.size()));
    json dir = json::array();
    for (const auto& e : entries_) {
      dir.push_back({{"name", e.name},
                     {"shape", e.shape},
                     {"dtype", e.dtype},
                     {"offset", e.offset},
                     {"bytes", e.bytes}});
    }
    header["tensors"] = dir;
    const std::string hs = header.dump();

    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw IoError("cannot open '" + tmp + "' for writing");
      out.write(kTensorFileMagic, 4);
      const uint32_t ver = kTensorFileVersion;
      out.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
      const uint64_t hlen = hs.size();
      out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
      out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
      const size_t pos = 4 + sizeof(ver) + sizeof(hlen) + hs.size();
      const size_t padded = detail::align_up(pos, kTensorAlign);
      const std::string pad(padded - pos, '\0');
      out.write(pad.data(), static_cast<std::streamsize>(pad.size()));
      out.write(reinterpret_cast<const char*>(payload_.data()),
                static_cast<std::streamsize>(payload_.size()));
      if (!out) throw IoError("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
      throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
    }
  }

 private:
  std::vector<TensorEntry> entries_;
  std::vector<unsigned char> payload_;
  json meta_;
};

namespace detail {

class MmapFile {
 public:
  explicit MmapFile(const std::string& path) {
    fd_ = ::open(path.c_str(), O_RDONLY);
    if (fd_ < 0) throw IoError("cannot open '" + path + "'");
    struct stat st{};
    if (::fstat(fd_, &st) != 0) {
      ::close(fd_);
      throw IoError("cannot stat '" + path + "'");
    }
    size_ = static_cast<size_t>(st.st_size);
    if (size_ > 0) {
      base_ = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd_, 0);
      if (base_ == MAP_FAILED) {
        ::close(fd_);
        throw IoError("mmap failed for '" + path + "'");
      }
    }
  }
  ~MmapFile() {
    if (base_ != nullptr && base_ != MAP_FAILED) ::munmap(base_, size_);
    if (fd_ >= 0) ::close(fd_);
  }
  MmapFile(const MmapFile&) = delete;
  MmapFile& operator=(const MmapFile&) = delete;

  const unsigned char* data() const {
    return static_cast<const unsigned char*>(base_);
  }
  size_t size() const { return size_; }

 private:
  int fd_ = -1;
  void* base_ = nullptr;
  size_t size_ = 0;
};

}  // namespace detail

class TensorFileReader {
 public:
  // mmap=true keeps the file mapped and serves zero-copy pointers.
  static TensorFileReader open(const std::string& path, bool use_mmap = false) {
    TensorFileReader r;
    r.path_ = path;
    if (use_mmap) {
      r.map_ = std::make_shared<detail::MmapFile>(path);
      r.parse(r.map_->data(), r.map_->size());
    } else {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw IoError("cannot open '" + path + "'");
      std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
      r.owned_ = std::make_shared<std::vector<unsigned char>>(std::move(buf));
      r.parse(r.owned_->data(), r.owned_->size());
    }
    return r;
  }

  const json& meta() const { return meta_; }
  const std::vector<TensorEntry>& entries() const { return entries_; }

  bool has(const std::string& name) const { return find(name) != nullptr; }

  const TensorEntry& entry(const std::string& name) const {
    const TensorEntry* e = find(name);
    if (!e) throw IoError("tensor '" + name + "' missing from '" + path_ + "'");
    return *e;
  }

  template <class T>
  const T* data(const TensorEntry& e) const {
    if (e.dtype != detail::dtype_name<T>()) {
      throw IoError("tensor '" + e.name + "' has dtype " + e.dtype);
    }
    return reinterpret_cast<const T*>(payload_ + e.offset);
  }

  template <class S>
  Mat<S> read_matrix(const std::string& name) const {
    const TensorEntry& e = entry(name);
    if (e.shape.size() != 2) {
      throw IoError("tensor '" + name + "' is not 2-d");
    }
    return Eigen::Map<const Mat<S>>(data<S>(e), e.shape[0], e.shape[1]);
  }

  template <class S>
  Vec<S> read_vector(const std::string& name) const {
    const TensorEntry& e = entry(name);
    if (e.shape.size() != 1) {
      throw IoError("tensor '" + name + "' is not 1-d");
    }
    return Eigen::Map<const Vec<S>>(data<S>(e), e.shape[0]);
  }

  bool checksum_ok() const {
    const std::string want = meta_checksum_;
    const std::string got = hex64(fnv1a(payload_, payload_bytes_));
    return want == got;
  }

  // Keeps the mapping (or buffer) alive for views handed out by data().
  std::shared_ptr<const void> retain() const {
    if (map_) return map_;
    return owned_;
  }

 private:
  void parse(const unsigned char* base, size_t size) {
    if (size < 16 || std::memcmp(base, kTensorFileMagic, 4) != 0) {
      throw IoError("'" + path_ + "' is not a tensor container");
    }
    uint32_t ver = 0;
    std::memcpy(&ver, base + 4, sizeof(ver));
    if (ver != kTensorFileVersion) {
      throw IoError("'" + path_ + "': unsupported container version " +
                    std::to_string(ver));
    }
    uint64_t hlen = 0;
    std::memcpy(&hlen, base + 8, sizeof(hlen));
    const size_t header_end = 16 + hlen;
    if (header_end > size) throw IoError("'" + path_ + "': truncated header");
    json header;
    try {
      header = json::parse(base + 16, base + header_end);
    } catch (const json::exception& e) {
      throw IoError("'" + path_ + "': bad header: " + e.what());
    }
    meta_ = header.value("meta", json::object());
    meta_checksum_ = header.value("checksum", "");
    const size_t payload_start = detail::align_up(header_end, kTensorAlign);
    if (payload_start > size) throw IoError("'" + path_ + "': truncated file");
    payload_ = base + payload_start;
    payload_bytes_ = size - payload_start;
    for (const auto& t : header["tensors"]) {
      TensorEntry e;
      e.name = t.at("name").get<std::string>();
      e.shape = t.at("shape").get<std::vector<int64_t>>();
      e.dtype = t.at("dtype").get<std::string>();
      e.offset = t.at("offset").get<size_t>();
      e.bytes = t.at("bytes").get<size_t>();
      if (e.offset + e.bytes > payload_bytes_) {
        throw IoError("'" + path_ + "': tensor '" + e.name + "' out of bounds");
      }
      entries_.push_back(std::move(e));
    }
  }

  const TensorEntry* find(const std::string& name) const {
    for (const auto& e : entries_) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }

  std::string path_;
  std::shared_ptr<detail::MmapFile> map_;
  std::shared_ptr<std::vector<unsigned char>> owned_;
  const unsigned char* payload_ = nullptr;
  size_t payload_bytes_ = 0;
  std::vector<TensorEntry> entries_;
  json meta_;
  std::string meta_checksum_;
};

}  // namespace prosoprobe
