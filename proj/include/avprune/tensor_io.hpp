// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "avprune/harness.hpp"
#include "avprune/matrix.hpp"
#include "avprune/sequence.hpp"
#include "avprune/trace.hpp"

namespace avprune {

/// OMTN tensor: "OMTN", u32 version (1), u32 rank, u64 dims[rank], then
/// float32 data in row-major order. Everything little-endian.
struct Tensor {
    std::vector<std::uint64_t> shape;
    std::vector<float> data;
};

inline constexpr std::uint32_t kTensorVersion = 1;

void write_tensor(std::ostream& out, const Tensor& tensor);
Tensor read_tensor(std::istream& in);
void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor(const std::filesystem::path& path);

void write_matrix(const std::filesystem::path& path, const MatrixF& m);
/// Reads a rank-2 tensor; throws SchemaError for any other rank.
MatrixF read_matrix(const std::filesystem::path& path);

/// One decimal id per line.
void write_ids(const std::filesystem::path& path, const std::vector<TokenId>& ids);
std::vector<TokenId> read_ids(const std::filesystem::path& path);

/// Per-layer lines followed by a summary line carrying the digest.
void write_trace_jsonl(std::ostream& out, const PruneTrace& trace);
void write_trace_jsonl(const std::filesystem::path& path, const PruneTrace& trace);
/// Throws SchemaError on missing keys or a digest mismatch.
PruneTrace read_trace_jsonl(std::istream& in);
PruneTrace read_trace_jsonl(const std::filesystem::path& path);

/// Metadata line followed by one {id, modality, chunk, position} line per token.
void write_layout_jsonl(const std::filesystem::path& path, const InterleavedSequence& seq,
                        const std::string& config_digest);
struct LayoutFile {
    InterleavedSequence sequence;  // token metadata only; embeddings empty
    std::string config_digest;
};

LayoutFile read_layout_jsonl(const std::filesystem::path& path);

/// layer_NNN.omtn + layer_NNN.ids per layer, plus manifest.json.
class AttentionDumper {
public:
    AttentionDumper(std::filesystem::path dir, std::string config_digest);

    void operator()(const LayerAttention& layer);
    void finish() const;

private:
    std::filesystem::path m_dir;
    std::string m_config_digest;
    std::size_t m_layers = 0;
};

std::filesystem::path attention_tensor_path(const std::filesystem::path& dir, std::size_t layer);
std::filesystem::path attention_ids_path(const std::filesystem::path& dir, std::size_t layer);

/// Reads layer files from a dump directory on demand.
AttentionSource attention_source_from_dir(const std::filesystem::path& dir);

/// Loads a tensor plus sidecar ids (`<path>.ids` unless given).
RecordedAttention read_recorded_attention(const std::filesystem::path& tensor_path,
                                          const std::filesystem::path& ids_path);

}  // namespace avprune
