// SPDX-License-Identifier: Apache-2.0
#include "isirx/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian; big-endian hosts are unsupported");

namespace isirx::nn {

namespace {
constexpr const char* kMagic = "isirx-checkpoint";
constexpr int kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const std::map<std::string, std::string>& meta) {
    std::ostringstream header;
    header << kMagic << " version " << kVersion << "\n";
    for (const auto& [k, v] : meta) {
        require(k.find(' ') == std::string::npos, "meta key must not contain spaces: " + k);
        header << "meta " << k << " " << v << "\n";
    }
    std::size_t offset = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Param& p = params.at(i);
        require(p.name.find(' ') == std::string::npos, "tensor name must not contain spaces");
        header << "tensor " << p.name << " " << p.value.rows() << " " << p.value.cols()
               << " f32 " << offset << "\n";
        offset += static_cast<std::size_t>(p.value.size()) * sizeof(float);
    }
    header << "end-header\n";

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ParseError("cannot write checkpoint: " + path);
    const std::string h = header.str();
    f.write(h.data(), static_cast<std::streamsize>(h.size()));
    std::vector<float> buf;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Param& p = params.at(i);
        buf.resize(static_cast<std::size_t>(p.value.size()));
        for (Eigen::Index j = 0; j < p.value.size(); ++j)
            buf[static_cast<std::size_t>(j)] = static_cast<float>(p.value(j));
        f.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!f) throw ParseError("checkpoint write failed: " + path);
}

namespace {

struct TensorEntry {
    std::string name;
    Eigen::Index rows, cols;
    std::size_t offset;
};

struct Header {
    std::map<std::string, std::string> meta;
    std::vector<TensorEntry> tensors;
    std::streampos payload_start;
};

Header parse_header(std::ifstream& f, const std::string& path) {
    Header h;
    std::string line;
    if (!std::getline(f, line)) throw ParseError("empty checkpoint: " + path);
    {
        std::istringstream is(line);
        std::string magic, kw;
        int version = 0;
        is >> magic >> kw >> version;
        if (magic != kMagic || kw != "version")
            throw ParseError("not a checkpoint file: " + path);
        if (version != kVersion)
            throw ParseError("unsupported checkpoint version in " + path);
    }
    while (std::getline(f, line)) {
        if (line == "end-header") {
            h.payload_start = f.tellg();
            return h;
        }
        std::istringstream is(line);
        std::string kind;
        is >> kind;
        if (kind == "meta") {
            std::string key;
            is >> key;
            std::string value;
            std::getline(is, value);
            if (!value.empty() && value.front() == ' ') value.erase(0, 1);
            h.meta[key] = value;
        } else if (kind == "tensor") {
            TensorEntry e;
            std::string dtype;
            is >> e.name >> e.rows >> e.cols >> dtype >> e.offset;
            if (!is || dtype != "f32") throw ParseError("bad tensor line in " + path);
            h.tensors.push_back(e);
        } else {
            throw ParseError("unknown header line in " + path + ": " + line);
        }
    }
    throw ParseError("checkpoint header not terminated: " + path);
}

}  // namespace

std::map<std::string, std::string> read_checkpoint_meta(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open checkpoint: " + path);
    return parse_header(f, path).meta;
}

std::map<std::string, std::string> load_checkpoint(const std::string& path, ParamStore& params) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open checkpoint: " + path);
    Header h = parse_header(f, path);
    if (h.tensors.size() != params.size())
        throw ParseError("checkpoint/model mismatch: tensor count differs in " + path);
    std::vector<float> buf;
    for (const auto& e : h.tensors) {
        Param* p = params.find(e.name);
        if (!p) throw ParseError("checkpoint has unknown tensor " + e.name);
        if (p->value.rows() != e.rows || p->value.cols() != e.cols)
            throw ParseError("checkpoint shape mismatch for tensor " + e.name);
        f.seekg(h.payload_start + static_cast<std::streamoff>(e.offset));
        buf.resize(static_cast<std::size_t>(e.rows * e.cols));
        f.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (!f) throw ParseError("checkpoint payload truncated: " + path);
        for (Eigen::Index j = 0; j < p->value.size(); ++j)
            p->value(j) = static_cast<double>(buf[static_cast<std::size_t>(j)]);
    }
    return h.meta;
}

}  // namespace isirx::nn
