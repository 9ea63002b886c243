#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "dhb/error.hpp"

namespace dhb::io {

// Little-endian host assumed; files are not meant to move across
// architectures.
class Writer {
public:
    template <typename T>
        requires std::is_trivially_copyable_v<T>
    void pod(const T& v) {
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    void u64(std::uint64_t v) { pod(v); }
    void f64(double v) { pod(v); }
    void str(const std::string& s) {
        u64(s.size());
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    template <typename T>
        requires std::is_trivially_copyable_v<T>
    void array(std::span<const T> v) {
        u64(v.size());
        const auto* p = reinterpret_cast<const char*>(v.data());
        buf_.insert(buf_.end(), p, p + v.size_bytes());
    }
    template <typename T>
    void array(const std::vector<T>& v) {
        array(std::span<const T>(v));
    }

    [[nodiscard]] const std::vector<char>& buffer() const { return buf_; }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    explicit Reader(std::vector<char> data) : buf_(std::move(data)) {}

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::uint64_t u64() { return pod<std::uint64_t>(); }
    double f64() { return pod<double>(); }
    std::string str() {
        auto n = u64();
        need(n);
        std::string s(buf_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    template <typename T>
    std::vector<T> array() {
        auto n = u64();
        need(n * sizeof(T));
        std::vector<T> v(n);
        std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(T));
        pos_ += n * sizeof(T);
        return v;
    }
    [[nodiscard]] bool at_end() const { return pos_ == buf_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) throw IoError("truncated binary file");
    }
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

// Write to a sibling temp file, then rename over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::span<const char> data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, std::span<const char>(text.data(), text.size()));
}

inline std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("cannot open " + path.string());
    in.seekg(0, std::ios::end);
    auto n = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    std::vector<char> buf(n);
    in.read(buf.data(), static_cast<std::streamsize>(n));
    if (!in) throw IoError("read failed for " + path.string());
    return buf;
}

// Files start with an 8-byte magic and a format version.
inline void write_header(Writer& w, const char (&magic)[9], std::uint64_t version) {
    for (int i = 0; i < 8; ++i) w.pod(magic[i]);
    w.u64(version);
}

inline void check_header(Reader& r, const char (&magic)[9], std::uint64_t version,
                         const std::string& what) {
    for (int i = 0; i < 8; ++i) {
        if (r.pod<char>() != magic[i]) throw IoError(what + ": bad magic");
    }
    auto v = r.u64();
    if (v != version) throw IoError(what + ": unsupported version " + std::to_string(v));
}

}  // namespace dhb::io
