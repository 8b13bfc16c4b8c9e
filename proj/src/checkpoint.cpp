#include "myinet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "myinet/errors.hpp"

namespace myinet {

namespace {

constexpr char kMagic[8] = {'M', 'Y', 'I', 'N', 'E', 'T', 'C', '1'};

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("truncated checkpoint: " + path);
    return v;
}

void put_string(std::ofstream& out, const std::string& s) {
    put<uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::ifstream& in, const std::string& path) {
    const auto len = get<uint64_t>(in, path);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw DataError("truncated checkpoint: " + path);
    return s;
}

void put_tensor_list(std::ofstream& out, const std::vector<std::pair<std::string, Tensor>>& list) {
    put<uint64_t>(out, list.size());
    for (const auto& [name, t] : list) {
        put_string(out, name);
        put<int32_t>(out, t.n());
        put<int32_t>(out, t.c());
        put<int32_t>(out, t.h());
        put<int32_t>(out, t.w());
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
}

std::vector<std::pair<std::string, Tensor>> get_tensor_list(std::ifstream& in,
                                                            const std::string& path) {
    const auto count = get<uint64_t>(in, path);
    std::vector<std::pair<std::string, Tensor>> list;
    list.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        std::string name = get_string(in, path);
        const auto n = get<int32_t>(in, path);
        const auto c = get<int32_t>(in, path);
        const auto h = get<int32_t>(in, path);
        const auto w = get<int32_t>(in, path);
        Tensor t(n, c, h, w);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!in) throw DataError("truncated checkpoint: " + path);
        list.emplace_back(std::move(name), std::move(t));
    }
    return list;
}

}  // namespace

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    put<uint32_t>(out, 1);  // format version
    put<uint64_t>(out, ck.config_hash);
    put_string(out, ck.config_json);
    put<int32_t>(out, ck.best_epoch);
    put<uint64_t>(out, ck.history.size());
    for (const auto& e : ck.history) {
        put<int32_t>(out, e.epoch);
        put<double>(out, e.lr);
        put<double>(out, e.train_loss);
        put<double>(out, e.val_loss);
    }
    put_tensor_list(out, ck.params);
    put_tensor_list(out, ck.velocity);
    if (!out) throw DataError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("not a checkpoint file: " + path);
    const auto version = get<uint32_t>(in, path);
    if (version != 1) throw DataError("unsupported checkpoint version in " + path);

    Checkpoint ck;
    ck.config_hash = get<uint64_t>(in, path);
    ck.config_json = get_string(in, path);
    if (fnv1a64(ck.config_json) != ck.config_hash)
        throw DataError("checkpoint/config hash mismatch: " + path);
    ck.best_epoch = get<int32_t>(in, path);
    const auto n_hist = get<uint64_t>(in, path);
    for (uint64_t i = 0; i < n_hist; ++i) {
        EpochStats e;
        e.epoch = get<int32_t>(in, path);
        e.lr = get<double>(in, path);
        e.train_loss = get<double>(in, path);
        e.val_loss = get<double>(in, path);
        ck.history.push_back(e);
    }
    ck.params = get_tensor_list(in, path);
    ck.velocity = get_tensor_list(in, path);
    return ck;
}

std::vector<std::pair<std::string, Tensor>> capture_params(Layer& model) {
    std::vector<std::pair<std::string, Tensor>> out;
    for (auto& p : model.params("model")) {
        Tensor copy(p.tensor->n(), p.tensor->c(), p.tensor->h(), p.tensor->w());
        copy.values() = p.tensor->values();
        out.emplace_back(p.name, std::move(copy));
    }
    return out;
}

void restore_params(Layer& model, const std::vector<std::pair<std::string, Tensor>>& stored) {
    std::map<std::string, const Tensor*> by_name;
    for (const auto& [name, t] : stored) by_name[name] = &t;
    for (auto& p : model.params("model")) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) throw DataError("checkpoint missing parameter " + p.name);
        if (!p.tensor->same_shape(*it->second))
            throw DataError("checkpoint shape mismatch for " + p.name);
        p.tensor->values() = it->second->values();
    }
}

}  // namespace myinet
