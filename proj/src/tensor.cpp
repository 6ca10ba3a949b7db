#include "mcastle/tensor.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "mcastle/errors.hpp"

namespace mcastle {

namespace {

constexpr char kMagic[4] = {'M', 'C', 'T', 'L'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kNdim = 4;

void put_u32(std::string& buf, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

void put_f64(std::string& buf, double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    put_u64(buf, bits);
}

class Reader {
  public:
    Reader(const char* p, std::size_t n) : p_(p), n_(n) {}
    std::size_t remaining() const { return n_ - off_; }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p_[off_ + k])) << (8 * k);
        off_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p_[off_ + k])) << (8 * k);
        off_ += 8;
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double x;
        std::memcpy(&x, &bits, sizeof x);
        return x;
    }
    const char* raw(std::size_t n) {
        need(n);
        const char* q = p_ + off_;
        off_ += n;
        return q;
    }

  private:
    void need(std::size_t n) const {
        if (off_ + n > n_) raise(Errc::validation, "tensor file truncated");
    }
    const char* p_;
    std::size_t n_;
    std::size_t off_ = 0;
};

}  // namespace

GridTensor GridTensor::zeros(std::size_t rows, std::size_t cols, std::size_t vars, std::size_t t) {
    GridTensor x;
    x.n_rows = rows;
    x.n_cols = cols;
    x.n_vars = vars;
    x.n_time = t;
    x.data.assign(rows * cols * vars * t, 0.0);
    return x;
}

void write_tensor(const GridTensor& x, const std::filesystem::path& path) {
    if (x.data.size() != x.size())
        raise(Errc::validation, "tensor payload does not match its dims");
    std::string buf;
    buf.reserve(44 + 8 * x.data.size());
    buf.append(kMagic, 4);
    put_u32(buf, kVersion);
    put_u32(buf, kNdim);
    put_u64(buf, x.n_rows);
    put_u64(buf, x.n_cols);
    put_u64(buf, x.n_vars);
    put_u64(buf, x.n_time);
    for (double v : x.data) put_f64(buf, v);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::io, "cannot open for writing: " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) raise(Errc::io, "short write: " + path.string());
}

GridTensor read_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::io, "cannot open for reading: " + path.string());
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 44) raise(Errc::format, "tensor file too short for header");
    if (std::memcmp(buf.data(), kMagic, 4) != 0) raise(Errc::format, "bad magic; not a tensor file");

    Reader r(buf.data() + 4, buf.size() - 4);
    const std::uint32_t version = r.u32();
    if (version != kVersion) raise(Errc::format, "unsupported tensor version " + std::to_string(version));
    const std::uint32_t ndim = r.u32();
    if (ndim != kNdim) raise(Errc::format, "unsupported ndim " + std::to_string(ndim));

    GridTensor x;
    x.n_rows = r.u64();
    x.n_cols = r.u64();
    x.n_vars = r.u64();
    x.n_time = r.u64();

    // Overflow-safe element count check before allocating.
    std::uint64_t count = 1;
    for (std::uint64_t d : {x.n_rows, x.n_cols, x.n_vars, x.n_time}) {
        if (d == 0) {
            count = 0;
            continue;
        }
        if (count > std::numeric_limits<std::uint64_t>::max() / d)
            raise(Errc::validation, "tensor dims overflow");
        count *= d;
    }
    if (r.remaining() != count * 8) raise(Errc::validation, "tensor payload size mismatch");

    x.data.resize(count);
    const char* raw = r.raw(count * 8);
    for (std::uint64_t k = 0; k < count; ++k) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[8 * k + b])) << (8 * b);
        std::memcpy(&x.data[k], &bits, sizeof(double));
    }
    return x;
}

void write_tensor_meta(const std::filesystem::path& tensor_path, const std::string& json_text) {
    std::filesystem::path p = tensor_path;
    p += ".meta.json";
    std::ofstream out(p, std::ios::trunc);
    if (!out) raise(Errc::io, "cannot open for writing: " + p.string());
    out << json_text;
    if (!out) raise(Errc::io, "short write: " + p.string());
}

std::string read_tensor_meta(const std::filesystem::path& tensor_path) {
    std::filesystem::path p = tensor_path;
    p += ".meta.json";
    std::ifstream in(p);
    if (!in) return "";
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace mcastle
