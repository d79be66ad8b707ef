#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "flst/errors.hpp"
#include "flst/mlp.hpp"

// Checkpoint format (little-endian throughout):
//   bytes 0..7   magic "FLSTNET\0"
//   u32          format version (currently 1)
//   u32          layer count L
//   u64 * L      layer sizes
//   u8  * (L-1)  activation tags (0 relu, 1 tanh, 2 softmax, 3 linear)
//   per transition k = 0..L-2:
//     f64 * (sizes[k+1]*sizes[k])  weight matrix, row-major
//     f64 * sizes[k+1]             bias vector
// Doubles are stored as raw IEEE-754 bit patterns, so a round trip is
// bit-exact. Agent bundles wrap several named networks plus a metadata string:
//   magic "FLSTAGB\0", u32 version, u32 net count,
//   per net: u32 name length, name bytes, u64 blob length, checkpoint blob,
//   then u64 metadata length, metadata bytes (JSON).

namespace flst {

namespace ckpt_detail {

constexpr char kNetMagic[8] = {'F', 'L', 'S', 'T', 'N', 'E', 'T', '\0'};
constexpr char kAgentMagic[8] = {'F', 'L', 'S', 'T', 'A', 'G', 'B', '\0'};
constexpr std::uint32_t kVersion = 1;

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(out, bits);
}

struct Reader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) const {
        if (pos + n > size)
            throw DecodeError(std::string("checkpoint truncated while reading ") + what);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64(const char* what) {
        std::uint64_t bits = u64(what);
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return data[pos++];
    }
    void magic(const char expect[8]) {
        need(8, "magic");
        if (std::memcmp(data + pos, expect, 8) != 0)
            throw DecodeError("checkpoint magic mismatch");
        pos += 8;
    }
};

inline std::uint8_t activation_tag(Activation a) {
    switch (a) {
        case Activation::Relu: return 0;
        case Activation::Tanh: return 1;
        case Activation::Softmax: return 2;
        case Activation::Linear: return 3;
    }
    return 0xff;
}

inline Activation activation_from_tag(std::uint8_t t) {
    switch (t) {
        case 0: return Activation::Relu;
        case 1: return Activation::Tanh;
        case 2: return Activation::Softmax;
        case 3: return Activation::Linear;
    }
    throw DecodeError("unknown activation tag " + std::to_string(int(t)));
}

} // namespace ckpt_detail

inline std::vector<std::uint8_t> serialize_mlp(const Mlp& net) {
    using namespace ckpt_detail;
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kNetMagic, kNetMagic + 8);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(net.layer_sizes.size()));
    for (std::size_t s : net.layer_sizes) put_u64(out, s);
    for (Activation a : net.activations) out.push_back(activation_tag(a));
    for (std::size_t k = 0; k < net.transition_count(); ++k) {
        for (double v : net.weights[k].values) put_f64(out, v);
        for (double v : net.biases[k]) put_f64(out, v);
    }
    return out;
}

inline Mlp deserialize_mlp(const std::uint8_t* data, std::size_t size) {
    using namespace ckpt_detail;
    Reader r{data, size};
    r.magic(kNetMagic);
    const std::uint32_t version = r.u32("version");
    if (version != kVersion)
        throw DecodeError("unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t layers = r.u32("layer count");
    if (layers < 2) throw DecodeError("checkpoint declares fewer than two layers");
    Mlp net;
    for (std::uint32_t i = 0; i < layers; ++i) {
        const std::uint64_t s = r.u64("layer size");
        if (s == 0) throw DecodeError("checkpoint declares a zero-size layer");
        net.layer_sizes.push_back(static_cast<std::size_t>(s));
    }
    for (std::uint32_t i = 0; i + 1 < layers; ++i)
        net.activations.push_back(activation_from_tag(r.u8("activation tag")));
    for (std::uint32_t k = 0; k + 1 < layers; ++k) {
        Matrix w(net.layer_sizes[k + 1], net.layer_sizes[k]);
        for (double& v : w.values) v = r.f64("weight");
        if (!w.all_finite()) throw DecodeError("checkpoint contains non-finite weights");
        net.weights.push_back(std::move(w));
        std::vector<double> b(net.layer_sizes[k + 1]);
        for (double& v : b) {
            v = r.f64("bias");
            if (!std::isfinite(v)) throw DecodeError("checkpoint contains non-finite biases");
        }
        net.biases.push_back(std::move(b));
    }
    if (r.pos != size) throw DecodeError("checkpoint has trailing bytes");
    return net;
}

inline Mlp deserialize_mlp(const std::vector<std::uint8_t>& bytes) {
    return deserialize_mlp(bytes.data(), bytes.size());
}

// Deserialize and enforce an expected architecture; shape disagreement is a
// ShapeError, not a decode error, so callers can tell corruption from misuse.
inline Mlp deserialize_mlp_expect(const std::vector<std::uint8_t>& bytes,
                                  const std::vector<std::size_t>& expected_sizes) {
    Mlp net = deserialize_mlp(bytes);
    if (net.layer_sizes != expected_sizes) {
        std::string got, want;
        for (std::size_t s : net.layer_sizes) got += std::to_string(s) + " ";
        for (std::size_t s : expected_sizes) want += std::to_string(s) + " ";
        throw ShapeError("checkpoint architecture [ " + got + "] does not match expected [ " +
                         want + "]");
    }
    return net;
}

struct AgentBundle {
    std::vector<std::pair<std::string, Mlp>> nets;
    std::string metadata; // JSON text, opaque to this layer
};

inline std::vector<std::uint8_t> serialize_agent(const AgentBundle& bundle) {
    using namespace ckpt_detail;
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kAgentMagic, kAgentMagic + 8);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(bundle.nets.size()));
    for (const auto& [name, net] : bundle.nets) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        const auto blob = serialize_mlp(net);
        put_u64(out, blob.size());
        out.insert(out.end(), blob.begin(), blob.end());
    }
    put_u64(out, bundle.metadata.size());
    out.insert(out.end(), bundle.metadata.begin(), bundle.metadata.end());
    return out;
}

inline AgentBundle deserialize_agent(const std::vector<std::uint8_t>& bytes) {
    using namespace ckpt_detail;
    Reader r{bytes.data(), bytes.size()};
    r.magic(kAgentMagic);
    const std::uint32_t version = r.u32("version");
    if (version != kVersion)
        throw DecodeError("unsupported agent bundle version " + std::to_string(version));
    AgentBundle bundle;
    const std::uint32_t count = r.u32("net count");
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = r.u32("net name length");
        r.need(name_len, "net name");
        std::string name(reinterpret_cast<const char*>(bytes.data() + r.pos), name_len);
        r.pos += name_len;
        const std::uint64_t blob_len = r.u64("net blob length");
        r.need(blob_len, "net blob");
        Mlp net = deserialize_mlp(bytes.data() + r.pos, static_cast<std::size_t>(blob_len));
        r.pos += blob_len;
        bundle.nets.emplace_back(std::move(name), std::move(net));
    }
    const std::uint64_t meta_len = r.u64("metadata length");
    r.need(meta_len, "metadata");
    bundle.metadata.assign(reinterpret_cast<const char*>(bytes.data() + r.pos),
                           static_cast<std::size_t>(meta_len));
    r.pos += meta_len;
    if (r.pos != bytes.size()) throw DecodeError("agent bundle has trailing bytes");
    return bundle;
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw ConfigError("cannot open '" + path + "' for reading");
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw ConfigError("failed reading '" + path + "'");
    return bytes;
}

} // namespace flst
