// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include "avprune/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "avprune/error.hpp"
#include "json.hpp"

namespace avprune {

namespace {

constexpr std::array<char, 4> kMagic = {'O', 'M', 'T', 'N'};

template <typename T>
void put_le(std::ostream& out, T value) {
    std::array<unsigned char, sizeof(T)> bytes{};
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

template <typename T>
T get_le(std::istream& in, const char* what) {
    std::array<unsigned char, sizeof(T)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw Error(ErrorKind::kSchemaError, std::string("tensor: truncated ") + what);
    }
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(bytes[i]) << (8 * i);
    }
    return value;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) {
        throw Error(ErrorKind::kIoError, "cannot open '" + path.string() + "' for writing");
    }
    return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) {
        throw Error(ErrorKind::kIoError, "cannot open '" + path.string() + "'");
    }
    return in;
}

template <typename T>
T get_field(const nlohmann::json& j, const char* key, std::size_t line_no) {
    if (!j.contains(key)) {
        throw Error(ErrorKind::kSchemaError, "line " + std::to_string(line_no) + ": missing key '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorKind::kSchemaError, "line " + std::to_string(line_no) + ": bad value for '" + key + "'");
    }
}

nlohmann::json parse_line(const std::string& line, std::size_t line_no) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
        throw Error(ErrorKind::kSchemaError, "line " + std::to_string(line_no) + ": invalid JSON");
    }
}

std::string layer_stem(std::size_t layer) {
    std::ostringstream os;
    os << "layer_" << std::setw(3) << std::setfill('0') << layer;
    return os.str();
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& tensor) {
    std::uint64_t count = 1;
    for (auto d : tensor.shape) {
        count *= d;
    }
    require(count == tensor.data.size(), ErrorKind::kInvalidInput, "tensor: shape does not match data size");
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, kTensorVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.shape.size()));
    for (auto d : tensor.shape) {
        put_le<std::uint64_t>(out, d);
    }
    std::vector<unsigned char> raw(tensor.data.size() * 4);
    for (std::size_t i = 0; i < tensor.data.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(tensor.data[i]);
        for (std::size_t b = 0; b < 4; ++b) {
            raw[4 * i + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFF);
        }
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) {
        throw Error(ErrorKind::kIoError, "tensor: write failed");
    }
}

Tensor read_tensor(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (in.gcount() != 4 || magic != kMagic) {
        throw Error(ErrorKind::kSchemaError, "tensor: bad magic");
    }
    const auto version = get_le<std::uint32_t>(in, "version");
    if (version != kTensorVersion) {
        throw Error(ErrorKind::kSchemaError, "tensor: unsupported version " + std::to_string(version));
    }
    const auto rank = get_le<std::uint32_t>(in, "rank");
    Tensor tensor;
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        tensor.shape.push_back(get_le<std::uint64_t>(in, "dimension"));
        count *= tensor.shape.back();
    }
    std::vector<unsigned char> raw(count * 4);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw Error(ErrorKind::kSchemaError, "tensor: truncated data");
    }
    tensor.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = std::uint32_t{raw[4 * i]} | (std::uint32_t{raw[4 * i + 1]} << 8) |
                                   (std::uint32_t{raw[4 * i + 2]} << 16) | (std::uint32_t{raw[4 * i + 3]} << 24);
        tensor.data[i] = std::bit_cast<float>(bits);
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw Error(ErrorKind::kSchemaError, "tensor: trailing bytes");
    }
    return tensor;
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    write_tensor(out, tensor);
}

Tensor read_tensor(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::in | std::ios::binary);
    return read_tensor(in);
}

void write_matrix(const std::filesystem::path& path, const MatrixF& m) {
    write_tensor(path, Tensor{{m.rows(), m.cols()}, m.data()});
}

MatrixF read_matrix(const std::filesystem::path& path) {
    Tensor t = read_tensor(path);
    if (t.shape.size() != 2) {
        throw Error(ErrorKind::kSchemaError, "'" + path.string() + "' is not a rank-2 tensor");
    }
    return MatrixF(t.shape[0], t.shape[1], std::move(t.data));
}

void write_ids(const std::filesystem::path& path, const std::vector<TokenId>& ids) {
    auto out = open_out(path);
    for (TokenId id : ids) {
        out << id << '\n';
    }
}

std::vector<TokenId> read_ids(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::vector<TokenId> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        std::size_t used = 0;
        unsigned long long value = 0;
        try {
            value = std::stoull(line, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != line.size() || line.front() == '-') {
            throw Error(ErrorKind::kSchemaError,
                        path.string() + ":" + std::to_string(line_no) + ": expected a decimal token id");
        }
        ids.push_back(static_cast<TokenId>(value));
    }
    return ids;
}

void write_trace_jsonl(std::ostream& out, const PruneTrace& trace) {
    for (const auto& record : trace.layers) {
        out << canonical_layer_json(record) << '\n';
    }
    nlohmann::json summary;
    summary["digest"] = hex64(trace.digest());
    summary["config_digest"] = trace.config_digest;
    summary["layers"] = trace.layers.size();
    summary["original_tokens"] = trace.original_tokens;
    summary["final_audiovisual"] = trace.final_audiovisual();
    if (trace.intra) {
        summary["intra"] = {{"audio_before", trace.intra->audio_before},
                            {"audio_after", trace.intra->audio_after},
                            {"video_before", trace.intra->video_before},
                            {"video_after", trace.intra->video_after}};
    } else {
        summary["intra"] = nullptr;
    }
    out << summary.dump() << '\n';
}

void write_trace_jsonl(const std::filesystem::path& path, const PruneTrace& trace) {
    auto out = open_out(path);
    write_trace_jsonl(out, trace);
}

PruneTrace read_trace_jsonl(std::istream& in) {
    PruneTrace trace;
    std::string line;
    std::size_t line_no = 0;
    bool have_summary = false;
    std::string digest;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        if (have_summary) {
            throw Error(ErrorKind::kSchemaError, "line " + std::to_string(line_no) + ": content after summary");
        }
        const nlohmann::json j = parse_line(line, line_no);
        if (!j.is_object()) {
            throw Error(ErrorKind::kSchemaError, "line " + std::to_string(line_no) + ": expected an object");
        }
        if (j.contains("digest")) {
            have_summary = true;
            digest = get_field<std::string>(j, "digest", line_no);
            trace.config_digest = j.value("config_digest", std::string{});
            trace.original_tokens = get_field<std::size_t>(j, "original_tokens", line_no);
            if (j.contains("intra") && !j["intra"].is_null()) {
                const auto& ji = j["intra"];
                IntraReport report;
                report.audio_before = get_field<std::size_t>(ji, "audio_before", line_no);
                report.audio_after = get_field<std::size_t>(ji, "audio_after", line_no);
                report.video_before = get_field<std::size_t>(ji, "video_before", line_no);
                report.video_after = get_field<std::size_t>(ji, "video_after", line_no);
                trace.intra = report;
            }
            continue;
        }
        LayerRecord record;
        record.layer = get_field<std::size_t>(j, "layer", line_no);
        record.p_l = get_field<double>(j, "p_l", line_no);
        record.k_l = get_field<std::size_t>(j, "k_l", line_no);
        record.pruned_ids = get_field<std::vector<TokenId>>(j, "pruned_ids", line_no);
        record.n_audio = get_field<std::size_t>(j, "n_audio", line_no);
        record.n_video = get_field<std::size_t>(j, "n_video", line_no);
        record.n_text = get_field<std::size_t>(j, "n_text", line_no);
        record.selector = get_field<std::string>(j, "selector", line_no);
        if (record.layer != trace.layers.size()) {
            throw Error(ErrorKind::kSchemaError, "line " + std::to_string(line_no) + ": layers out of order");
        }
        trace.layers.push_back(std::move(record));
    }
    if (!have_summary) {
        throw Error(ErrorKind::kSchemaError, "trace: missing summary line");
    }
    if (digest != hex64(trace.digest())) {
        throw Error(ErrorKind::kSchemaError, "trace: digest mismatch");
    }
    return trace;
}

PruneTrace read_trace_jsonl(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_trace_jsonl(in);
}

void write_layout_jsonl(const std::filesystem::path& path, const InterleavedSequence& seq,
                        const std::string& config_digest) {
    auto out = open_out(path);
    nlohmann::json meta;
    meta["meta"] = {{"config_digest", config_digest},
                    {"num_chunks", seq.num_chunks},
                    {"tokens", seq.tokens.size()}};
    out << meta.dump() << '\n';
    for (const auto& t : seq.tokens) {
        nlohmann::json j;
        j["id"] = t.id;
        j["modality"] = std::string(to_string(t.modality));
        j["chunk"] = t.chunk_index ? nlohmann::json(*t.chunk_index) : nlohmann::json(nullptr);
        j["position"] = t.original_position;
        out << j.dump() << '\n';
    }
}

LayoutFile read_layout_jsonl(const std::filesystem::path& path) {
    auto in = open_in(path);
    LayoutFile file;
    InterleavedSequence& seq = file.sequence;
    std::string line;
    std::size_t line_no = 0;
    bool have_meta = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const nlohmann::json j = parse_line(line, line_no);
        if (j.contains("meta")) {
            seq.num_chunks = get_field<std::size_t>(j["meta"], "num_chunks", line_no);
            file.config_digest = j["meta"].value("config_digest", std::string{});
            have_meta = true;
            continue;
        }
        TokenMeta t;
        t.id = get_field<std::size_t>(j, "id", line_no);
        t.modality = modality_from_string(get_field<std::string>(j, "modality", line_no));
        if (j.contains("chunk") && !j["chunk"].is_null()) {
            t.chunk_index = get_field<std::size_t>(j, "chunk", line_no);
        }
        t.original_position = get_field<std::size_t>(j, "position", line_no);
        if (is_audiovisual(t.modality) != t.chunk_index.has_value()) {
            throw Error(ErrorKind::kSchemaError,
                        "line " + std::to_string(line_no) + ": chunk must be set exactly for audio/video tokens");
        }
        seq.tokens.push_back(t);
    }
    if (!have_meta) {
        throw Error(ErrorKind::kSchemaError, "layout: missing meta line");
    }
    return file;
}

std::filesystem::path attention_tensor_path(const std::filesystem::path& dir, std::size_t layer) {
    return dir / (layer_stem(layer) + ".omtn");
}

std::filesystem::path attention_ids_path(const std::filesystem::path& dir, std::size_t layer) {
    return dir / (layer_stem(layer) + ".ids");
}

AttentionDumper::AttentionDumper(std::filesystem::path dir, std::string config_digest)
    : m_dir(std::move(dir)), m_config_digest(std::move(config_digest)) {
    std::error_code ec;
    std::filesystem::create_directories(m_dir, ec);
    if (ec) {
        throw Error(ErrorKind::kIoError, "cannot create '" + m_dir.string() + "': " + ec.message());
    }
}

void AttentionDumper::operator()(const LayerAttention& layer) {
    write_matrix(attention_tensor_path(m_dir, layer.layer), layer.attention);
    write_ids(attention_ids_path(m_dir, layer.layer), layer.ids);
    m_layers = std::max(m_layers, layer.layer + 1);
}

void AttentionDumper::finish() const {
    auto out = open_out(m_dir / "manifest.json");
    nlohmann::json j;
    j["config_digest"] = m_config_digest;
    j["layers"] = m_layers;
    j["format"] = "OMTN";
    j["version"] = kTensorVersion;
    out << j.dump(2) << '\n';
}

RecordedAttention read_recorded_attention(const std::filesystem::path& tensor_path,
                                          const std::filesystem::path& ids_path) {
    RecordedAttention rec;
    rec.attention = read_matrix(tensor_path);
    rec.ids = read_ids(ids_path);
    if (rec.attention.rows() != rec.ids.size() || rec.attention.cols() != rec.ids.size()) {
        throw Error(ErrorKind::kSchemaError, "'" + tensor_path.string() + "' does not match its id list");
    }
    return rec;
}

AttentionSource attention_source_from_dir(const std::filesystem::path& dir) {
    return [dir](std::size_t layer) {
        const auto tensor = attention_tensor_path(dir, layer);
        const auto ids = attention_ids_path(dir, layer);
        if (!std::filesystem::exists(tensor) || !std::filesystem::exists(ids)) {
            throw Error(ErrorKind::kInvalidInput, "missing attention file for layer " + std::to_string(layer) +
                                                      " in '" + dir.string() + "'");
        }
        return read_recorded_attention(tensor, ids);
    };
}

}  // namespace avprune
