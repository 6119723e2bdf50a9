/*
 * Copyright 2026 The GPCL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gpcl/core/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace gpcl {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'G', 'P', 'C', 'L'};

class Writer {
public:
    template <typename T>
    void pod(T v) {
        const auto* p = reinterpret_cast<const unsigned char*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void raw(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        bytes.insert(bytes.end(), p, p + n);
    }
    void text64(const std::string& s) {
        pod<std::uint64_t>(s.size());
        raw(s.data(), s.size());
    }
    std::vector<unsigned char> bytes;
};

class Reader {
public:
    Reader(const std::vector<unsigned char>& b, std::size_t end) : bytes_(b), end_(end) {}
    template <typename T>
    T pod() {
        T v;
        take(&v, sizeof(T));
        return v;
    }
    void take(void* out, std::size_t n) {
        if (n > end_ - pos_) fail(ErrorCode::ChecksumMismatch, "checkpoint: truncated record");
        std::memcpy(out, bytes_.data() + pos_, n);
        pos_ += n;
    }
    std::string text(std::uint64_t n) {
        if (n > end_ - pos_) fail(ErrorCode::ChecksumMismatch, "checkpoint: truncated text");
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == end_; }

private:
    const std::vector<unsigned char>& bytes_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(const unsigned char* data, std::size_t n) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths
    while (n > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
        crc = crc32(crc, data, chunk);
        data += chunk;
        n -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

void put_matrix(Writer& w, const std::string& name, const Matrix& m) {
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.raw(name.data(), name.size());
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
    w.raw(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
}

std::map<std::string, std::string> parse_meta(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        out[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return out;
}

const std::string& meta_at(const std::map<std::string, std::string>& meta, const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) fail(ErrorCode::ChecksumMismatch, "checkpoint: missing meta field " + key);
    return it->second;
}

}  // namespace

std::vector<unsigned char> encode_checkpoint(const TrainState& state) {
    Writer w;
    w.raw(kMagic, 4);
    w.pod<std::uint32_t>(kCheckpointVersion);
    w.text64(state.model.config().to_text());

    std::ostringstream meta;
    const auto& c = state.model.counts();
    meta << "users = " << c.users << "\nbundles = " << c.bundles << "\nitems = " << c.items << "\n";
    meta << "epoch = " << state.epoch << "\n";
    meta << "adam.step = " << state.adam.step << "\n";
    meta << "adam.lr = " << format_double(state.adam.learning_rate) << "\n";
    meta << "rng = " << state.rng << "\n";
    w.text64(meta.str());

    const auto& params = state.model.parameters();
    const bool with_moments = state.adam.first_moment.size() == params.size();
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(params.size() * (with_moments ? 3 : 1)));
    for (const auto& p : params) put_matrix(w, p.name, p.value);
    if (with_moments) {
        for (std::size_t i = 0; i < params.size(); ++i) put_matrix(w, "adam.m." + params[i].name, state.adam.first_moment[i]);
        for (std::size_t i = 0; i < params.size(); ++i) put_matrix(w, "adam.v." + params[i].name, state.adam.second_moment[i]);
    }
    w.pod<std::uint32_t>(crc_of(w.bytes.data(), w.bytes.size()));
    return std::move(w.bytes);
}

TrainState decode_checkpoint(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < 4 + 4 + 4) fail(ErrorCode::ChecksumMismatch, "checkpoint: file too short");
    const std::size_t body = bytes.size() - 4;
    std::uint32_t stored = 0;
    std::memcpy(&stored, bytes.data() + body, 4);
    if (stored != crc_of(bytes.data(), body)) fail(ErrorCode::ChecksumMismatch, "checkpoint: CRC mismatch");

    Reader r(bytes, body);
    char magic[4];
    r.take(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) fail(ErrorCode::ChecksumMismatch, "checkpoint: bad magic");
    const auto version = r.pod<std::uint32_t>();
    if (version != kCheckpointVersion) {
        fail(ErrorCode::VersionMismatch, "checkpoint: unsupported format version " + std::to_string(version));
    }
    RunConfig cfg;
    cfg.apply_text(r.text(r.pod<std::uint64_t>()));
    const auto meta = parse_meta(r.text(r.pod<std::uint64_t>()));

    EntityCounts counts;
    counts.users = static_cast<std::uint32_t>(std::stoul(meta_at(meta, "users")));
    counts.bundles = static_cast<std::uint32_t>(std::stoul(meta_at(meta, "bundles")));
    counts.items = static_cast<std::uint32_t>(std::stoul(meta_at(meta, "items")));

    TrainState state;
    state.model = Model(cfg, counts);
    state.epoch = std::stoull(meta_at(meta, "epoch"));
    state.adam = make_adam(state.model.parameters(), std::stod(meta_at(meta, "adam.lr")));
    state.adam.step = std::stoull(meta_at(meta, "adam.step"));
    std::istringstream(meta_at(meta, "rng")) >> state.rng;

    auto& params = state.model.parameters();
    std::map<std::string, Matrix*> slots;
    for (std::size_t i = 0; i < params.size(); ++i) {
        slots[params[i].name] = &params[i].value;
        slots["adam.m." + params[i].name] = &state.adam.first_moment[i];
        slots["adam.v." + params[i].name] = &state.adam.second_moment[i];
    }
    const auto records = r.pod<std::uint32_t>();
    for (std::uint32_t k = 0; k < records; ++k) {
        const std::string name = r.text(r.pod<std::uint32_t>());
        const auto rows = r.pod<std::uint32_t>();
        const auto cols = r.pod<std::uint32_t>();
        auto it = slots.find(name);
        if (it == slots.end()) fail(ErrorCode::VersionMismatch, "checkpoint: unexpected record " + name);
        Matrix& dst = *it->second;
        if (dst.rows() != rows || dst.cols() != cols) {
            fail(ErrorCode::VersionMismatch, "checkpoint: record " + name + " has shape " + std::to_string(rows) +
                                                 "x" + std::to_string(cols) + ", config implies " +
                                                 std::to_string(dst.rows()) + "x" + std::to_string(dst.cols()));
        }
        r.take(dst.data(), sizeof(double) * static_cast<std::size_t>(dst.size()));
    }
    if (!r.done()) fail(ErrorCode::ChecksumMismatch, "checkpoint: trailing bytes");
    return state;
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(state);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::IoError, "write failed: " + path.string());
}

TrainState load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open checkpoint " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(ErrorCode::IoError, "read failed: " + path.string());
    return decode_checkpoint(bytes);
}

TrainState load_checkpoint(const std::filesystem::path& path, const RunConfig& expected) {
    TrainState state = load_checkpoint(path);
    const Model reference(expected, state.model.counts());
    const auto& have = state.model.parameters();
    const auto& want = reference.parameters();
    if (have.size() != want.size()) fail(ErrorCode::VersionMismatch, "checkpoint: parameter set differs from config");
    for (std::size_t i = 0; i < have.size(); ++i) {
        if (have[i].name != want[i].name || have[i].value.rows() != want[i].value.rows() ||
            have[i].value.cols() != want[i].value.cols()) {
            fail(ErrorCode::VersionMismatch, "checkpoint: parameter " + have[i].name + " does not fit config");
        }
    }
    return state;
}

}  // namespace gpcl
