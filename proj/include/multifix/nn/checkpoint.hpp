#pragma once

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "multifix/nn/sequence.hpp"

namespace multifix::nn {

// Model checkpoint container:
//   magic "MFIX1"
//   u32 little-endian manifest byte length, manifest as UTF-8 (JSON layer list)
//   raw little-endian float32 blobs, one per parameter/buffer in manifest order
namespace detail {

inline void write_u32le(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t read_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) | (static_cast<uint32_t>(b[2]) << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
}

inline void write_f32le(std::ostream& os, const std::vector<float>& v) {
    static_assert(sizeof(float) == 4);
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
    } else {
        for (float f : v) {
            uint32_t u;
            std::memcpy(&u, &f, 4);
            write_u32le(os, u);
        }
    }
}

inline void read_f32le(std::istream& is, std::vector<float>& v) {
    if constexpr (std::endian::native == std::endian::little) {
        is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
    } else {
        for (float& f : v) {
            uint32_t u = read_u32le(is);
            std::memcpy(&f, &u, 4);
        }
    }
}

inline nlohmann::json layer_config(const Layer& l) {
    nlohmann::json j;
    j["kind"] = l.kind();
    if (auto* d = dynamic_cast<const Dense*>(&l)) {
        j["in"] = d->in_features;
        j["out"] = d->out_features;
    } else if (auto* c = dynamic_cast<const Conv2d*>(&l)) {
        j["in"] = c->in_channels;
        j["out"] = c->out_channels;
        j["k"] = c->ksize;
        j["stride"] = c->stride;
        j["pad"] = c->pad;
    } else if (auto* p = dynamic_cast<const MaxPool2d*>(&l)) {
        j["k"] = p->ksize;
        j["stride"] = p->stride;
    } else if (auto* b = dynamic_cast<const BatchNorm*>(&l)) {
        j["features"] = b->features;
        j["momentum"] = b->momentum;
        j["eps"] = b->eps;
    } else if (auto* dr = dynamic_cast<const Dropout*>(&l)) {
        j["rate"] = dr->rate;
    } else if (auto* r = dynamic_cast<const Reshape*>(&l)) {
        j["dims"] = r->dims;
    } else if (auto* u = dynamic_cast<const Upsample2d*>(&l)) {
        j["factor"] = u->factor;
    }
    return j;
}

inline std::unique_ptr<Layer> layer_from_config(const nlohmann::json& j) {
    std::string kind = j.at("kind");
    if (kind == "dense") return std::make_unique<Dense>(j.at("in"), j.at("out"));
    if (kind == "conv2d")
        return std::make_unique<Conv2d>(j.at("in"), j.at("out"), j.at("k"), j.at("stride"), j.at("pad"));
    if (kind == "maxpool2d") return std::make_unique<MaxPool2d>(j.at("k"), j.at("stride"));
    if (kind == "batchnorm") return std::make_unique<BatchNorm>(j.at("features"), j.at("momentum"), j.at("eps"));
    if (kind == "dropout") return std::make_unique<Dropout>(j.at("rate"));
    if (kind == "relu") return std::make_unique<Relu>();
    if (kind == "sigmoid") return std::make_unique<Sigmoid>();
    if (kind == "softmax") return std::make_unique<Softmax>();
    if (kind == "flatten") return std::make_unique<Flatten>();
    if (kind == "reshape") return std::make_unique<Reshape>(j.at("dims").get<std::vector<int>>());
    if (kind == "upsample2d") return std::make_unique<Upsample2d>(j.at("factor"));
    throw DataError("checkpoint: unknown layer kind '" + kind + "'");
}

}  // namespace detail

inline constexpr char kCheckpointMagic[5] = {'M', 'F', 'I', 'X', '1'};

inline void save_checkpoint(const Sequence& seq, const std::string& path) {
    nlohmann::json manifest = nlohmann::json::array();
    for (int i = 0; i < seq.size(); ++i) {
        nlohmann::json j = detail::layer_config(seq.layer(i));
        nlohmann::json tensors = nlohmann::json::array();
        auto& mutable_layer = const_cast<Layer&>(seq.layer(i));
        for (auto& p : mutable_layer.parameters()) tensors.push_back({{"name", p.name}, {"shape", p.value->shape}});
        for (auto& p : mutable_layer.buffers()) tensors.push_back({{"name", p.name}, {"shape", p.value->shape}});
        j["tensors"] = tensors;
        manifest.push_back(j);
    }
    std::string m = manifest.dump();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("checkpoint: cannot open '" + path + "' for writing");
    os.write(kCheckpointMagic, 5);
    detail::write_u32le(os, static_cast<uint32_t>(m.size()));
    os.write(m.data(), static_cast<std::streamsize>(m.size()));
    for (int i = 0; i < seq.size(); ++i) {
        auto& l = const_cast<Layer&>(seq.layer(i));
        for (auto& p : l.parameters()) detail::write_f32le(os, p.value->data);
        for (auto& p : l.buffers()) detail::write_f32le(os, p.value->data);
    }
    if (!os) throw DataError("checkpoint: write failed for '" + path + "'");
}

inline Sequence load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open '" + path + "'");
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, kCheckpointMagic, 5) != 0)
        throw DataError("checkpoint: '" + path + "' is not an MFIX1 container");
    uint32_t mlen = detail::read_u32le(is);
    std::string m(mlen, '\0');
    is.read(m.data(), mlen);
    if (!is) throw DataError("checkpoint: truncated manifest in '" + path + "'");
    nlohmann::json manifest = nlohmann::json::parse(m);
    Sequence seq;
    for (const auto& j : manifest) seq.add(detail::layer_from_config(j));
    for (int i = 0; i < seq.size(); ++i) {
        const auto& j = manifest[static_cast<size_t>(i)];
        auto params = seq.layer(i).parameters();
        auto buffers = seq.layer(i).buffers();
        std::vector<Param> all = params;
        all.insert(all.end(), buffers.begin(), buffers.end());
        const auto& tensors = j.at("tensors");
        if (tensors.size() != all.size()) throw DataError("checkpoint: tensor count mismatch in layer " + std::to_string(i));
        for (size_t t = 0; t < all.size(); ++t) {
            auto shape = tensors[t].at("shape").get<std::vector<int>>();
            if (shape != all[t].value->shape)
                throw DataError("checkpoint: shape mismatch for tensor '" + std::string(tensors[t].at("name")) + "'");
            detail::read_f32le(is, all[t].value->data);
        }
    }
    if (!is) throw DataError("checkpoint: truncated parameter data in '" + path + "'");
    return seq;
}

}  // namespace multifix::nn
