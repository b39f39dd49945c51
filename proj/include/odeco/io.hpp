#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "odeco/decompose.hpp"
#include "odeco/odeco.hpp"
#include "odeco/tensor.hpp"

namespace odeco {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Tensor container, binary. Layout (all little-endian):
//   bytes 0..3   magic "ODCT"
//   u32          format version (1)
//   u32          order p
//   u64 * p      dimensions d_1..d_p
//   f64 * prod   entries in the mode-1-fastest linearization
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}
inline std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}
inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace detail

inline std::string encode_tensor(const DenseTensor& t) {
    std::string out;
    out.reserve(16 + 8 * t.dims.size() + 8 * t.data.size());
    out += "ODCT";
    detail::put_u32(out, 1);
    detail::put_u32(out, static_cast<std::uint32_t>(t.order()));
    for (int d : t.dims) detail::put_u64(out, static_cast<std::uint64_t>(d));
    for (double x : t.data) detail::put_f64(out, x);
    return out;
}

inline DenseTensor decode_tensor(const std::string& bytes) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 12 || std::memcmp(p, "ODCT", 4) != 0)
        throw std::invalid_argument("decode_tensor: bad magic");
    const std::uint32_t version = detail::get_u32(p + 4);
    if (version != 1) throw std::invalid_argument("decode_tensor: unsupported version");
    const std::uint32_t order = detail::get_u32(p + 8);
    if (order < 1 || order > 6) throw std::invalid_argument("decode_tensor: bad order");
    std::size_t off = 12;
    if (bytes.size() < off + 8 * order) throw std::invalid_argument("decode_tensor: truncated dims");
    std::vector<int> dims;
    std::size_t total = 1;
    for (std::uint32_t q = 0; q < order; ++q) {
        const std::uint64_t d = detail::get_u64(p + off);
        off += 8;
        if (d < 1 || d > (1ULL << 20)) throw std::invalid_argument("decode_tensor: bad dimension");
        dims.push_back(static_cast<int>(d));
        total *= static_cast<std::size_t>(d);
    }
    if (bytes.size() != off + 8 * total) throw std::invalid_argument("decode_tensor: bad payload size");
    std::vector<double> data(total);
    for (std::size_t i = 0; i < total; ++i) {
        data[i] = std::bit_cast<double>(detail::get_u64(p + off));
        off += 8;
    }
    return DenseTensor(std::move(dims), std::move(data));
}

inline void write_tensor(const std::string& path, const DenseTensor& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_tensor: cannot open " + path);
    const std::string bytes = encode_tensor(t);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write_tensor: write failed on " + path);
}

inline DenseTensor read_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_tensor: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_tensor(bytes);
}

// JSON debug format for small tensors: dims plus nested arrays with the
// first index outermost.
inline json tensor_to_json(const DenseTensor& t) {
    std::function<json(std::vector<int>&, int)> build = [&](std::vector<int>& idx, int mode) -> json {
        json arr = json::array();
        for (int i = 0; i < t.dims[static_cast<std::size_t>(mode)]; ++i) {
            idx[static_cast<std::size_t>(mode)] = i;
            if (mode + 1 == t.order())
                arr.push_back(t.at(idx));
            else
                arr.push_back(build(idx, mode + 1));
        }
        return arr;
    };
    std::vector<int> idx(static_cast<std::size_t>(t.order()), 0);
    return json{{"dims", t.dims}, {"data", build(idx, 0)}};
}

inline DenseTensor tensor_from_json(const json& j) {
    const std::vector<int> dims = j.at("dims").get<std::vector<int>>();
    DenseTensor t(dims);
    std::function<void(const json&, std::vector<int>&, int)> fill =
        [&](const json& arr, std::vector<int>& idx, int mode) {
            if (static_cast<int>(arr.size()) != dims[static_cast<std::size_t>(mode)])
                throw std::invalid_argument("tensor_from_json: ragged data");
            for (int i = 0; i < static_cast<int>(arr.size()); ++i) {
                idx[static_cast<std::size_t>(mode)] = i;
                if (mode + 1 == t.order())
                    t.at(idx) = arr[static_cast<std::size_t>(i)].get<double>();
                else
                    fill(arr[static_cast<std::size_t>(i)], idx, mode + 1);
            }
        };
    std::vector<int> idx(static_cast<std::size_t>(t.order()), 0);
    fill(j.at("data"), idx, 0);
    return t;
}

// ---------------------------------------------------------------------------
// Decomposition JSON: {p, r, dims, lambdas, factors} with factors stored as
// column-major flat lists, one per mode.
// ---------------------------------------------------------------------------

inline json decomposition_to_json(const OdecoDecomposition& dec) {
    json factors = json::array();
    for (const Matrix& f : dec.factors) factors.push_back(f.data);
    return json{{"p", dec.p}, {"r", dec.r}, {"dims", dec.dims}, {"lambdas", dec.lambdas},
                {"factors", factors}};
}

inline OdecoDecomposition decomposition_from_json(const json& j) {
    OdecoDecomposition dec;
    dec.p = j.at("p").get<int>();
    dec.r = j.at("r").get<int>();
    dec.dims = j.at("dims").get<std::vector<int>>();
    dec.lambdas = j.at("lambdas").get<std::vector<double>>();
    const json& factors = j.at("factors");
    if (static_cast<int>(factors.size()) != dec.p)
        throw std::invalid_argument("decomposition_from_json: factor count mismatch");
    for (int q = 0; q < dec.p; ++q) {
        Matrix f(dec.dims[static_cast<std::size_t>(q)], dec.r);
        const std::vector<double> data = factors[static_cast<std::size_t>(q)].get<std::vector<double>>();
        if (data.size() != f.data.size())
            throw std::invalid_argument("decomposition_from_json: factor size mismatch");
        f.data = data;
        dec.factors.push_back(std::move(f));
    }
    validate(dec);
    return dec;
}

// Estimates reuse the decomposition schema (lambdas may carry sign and the
// columns need not be orthogonal); traces are opt-in, they are large.
inline json estimate_to_json(const EstimatedDecomposition& est, const std::vector<int>& dims,
                             bool include_traces = false) {
    json factors = json::array();
    for (const Matrix& f : est.factors_hat) factors.push_back(f.data);
    json j{{"p", static_cast<int>(est.factors_hat.size())},
           {"r", est.rank()},
           {"dims", dims},
           {"lambdas", est.lambdas_hat},
           {"factors", factors},
           {"unrecovered", est.unrecovered}};
    if (include_traces) {
        json traces = json::array();
        for (const PowerIterationTrace& tr : est.traces) {
            json t{{"converged", tr.converged},
                   {"iterations_used", tr.iterations_used},
                   {"contraction_norms", tr.contraction_norms}};
            json its = json::array();
            for (const auto& sweep : tr.iterates) its.push_back(sweep);
            t["iterates"] = its;
            traces.push_back(std::move(t));
        }
        j["traces"] = traces;
    }
    return j;
}

inline void write_json(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_json: cannot open " + path);
    f << j.dump(2) << "\n";
}

inline json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_json: cannot open " + path);
    json j;
    f >> j;
    return j;
}

}  // namespace odeco
