// Copyright (C) 2026 avprune contributors
// SPDX-License-Identifier: Apache-2.0

#include "avprune/harness.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "avprune/error.hpp"

namespace avprune {

namespace {

std::vector<TokenId> ids_of(const InterleavedSequence& seq) {
    std::vector<TokenId> ids;
    ids.reserve(seq.tokens.size());
    for (const auto& t : seq.tokens) {
        ids.push_back(t.id);
    }
    return ids;
}

std::vector<std::size_t> positions_of(const InterleavedSequence& seq) {
    std::vector<std::size_t> pos;
    pos.reserve(seq.tokens.size());
    for (const auto& t : seq.tokens) {
        pos.push_back(t.original_position);
    }
    return pos;
}

}  // namespace

AttentionMap text_to_av_map(const InterleavedSequence& survivors, const MatrixF& attention, bool include_system_rows) {
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
    AttentionMap map;
    for (std::size_t i = 0; i < survivors.tokens.size(); ++i) {
        const TokenMeta& t = survivors.tokens[i];
        if (t.modality == Modality::kQueryText || (include_system_rows && t.modality == Modality::kSystemText)) {
            rows.push_back(i);
            map.row_ids.push_back(t.id);
        } else if (is_audiovisual(t.modality)) {
            cols.push_back(i);
            map.col_ids.push_back(t.id);
            map.col_chunks.push_back(t.chunk_index.value_or(0));
        }
    }
    map.values = MatrixD(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            map.values(r, c) = attention(rows[r], cols[c]);
        }
    }
    return map;
}

MatrixF reindex_attention(const RecordedAttention& recorded, const std::vector<TokenId>& ids) {
    const std::size_t n = ids.size();
    if (recorded.ids.size() != n || recorded.attention.rows() != n || recorded.attention.cols() != n) {
        throw Error(ErrorKind::kSchemaError, "recorded attention covers " + std::to_string(recorded.ids.size()) +
                                                 " tokens but " + std::to_string(n) + " survive");
    }
    std::unordered_map<TokenId, std::size_t> where;
    for (std::size_t i = 0; i < n; ++i) {
        where.emplace(recorded.ids[i], i);
    }
    std::vector<std::size_t> src(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = where.find(ids[i]);
        if (it == where.end()) {
            throw Error(ErrorKind::kSchemaError, "recorded attention is missing token id " + std::to_string(ids[i]));
        }
        src[i] = it->second;
    }
    MatrixF out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out(i, j) = recorded.attention(src[i], src[j]);
        }
    }
    return out;
}

PruneTrace run_pipeline(const InterleavedSequence& seq, const RunConfig& cfg, const AttentionProvider& provider,
                        const AttentionObserver& observer) {
    cfg.schedule.validate();
    require(!seq.tokens.empty(), ErrorKind::kInvalidInput, "run: empty sequence");
    require(seq.embeddings.rows() == seq.tokens.size(), ErrorKind::kInvalidInput,
            "run: embedding rows do not match tokens");

    PruneTrace trace;
    trace.original_tokens = seq.tokens.size();
    InterleavedSequence current = seq;
    if (cfg.intra) {
        IntraResult intra = apply_intra(seq, *cfg.intra);
        trace.intra = intra.report;
        current = std::move(intra.sequence);
    }

    Rng rng(cfg.selector_seed);
    const std::size_t max_chunk = seq.max_chunk();
    const std::size_t layers = cfg.schedule.layers;
    for (std::size_t l = 0; l < layers; ++l) {
        const MatrixF attention = provider(l, current);
        const std::size_t n = current.tokens.size();
        require(attention.rows() == n && attention.cols() == n, ErrorKind::kInvalidInput,
                "run: layer " + std::to_string(l) + " attention is not " + std::to_string(n) + " x " +
                    std::to_string(n));
        const std::vector<TokenId> ids = ids_of(current);
        if (observer) {
            observer(LayerAttention{l, ids, attention});
        }

        LayerRecord record;
        record.layer = l;
        record.n_audio = current.count(Modality::kAudio);
        record.n_video = current.count(Modality::kVideo);
        record.n_text = n - record.n_audio - record.n_video;
        record.p_l = prune_ratio(l, cfg.schedule);
        record.k_l = prune_count(record.n_audio, record.n_video, record.p_l);

        Selector effective = cfg.selector;
        if (effective == Selector::kTds && l < cfg.tds.start_layer) {
            effective = Selector::kPlain;
        }
        record.selector = std::string(to_string(effective));

        if (record.k_l > 0) {
            Selection selection;
            if (effective == Selector::kRandom) {
                std::vector<TokenId> av;
                for (const auto& t : current.tokens) {
                    if (is_audiovisual(t.modality)) {
                        av.push_back(t.id);
                    }
                }
                selection = random_select(av, record.k_l, rng);
            } else {
                const AttentionMap map = text_to_av_map(current, attention, cfg.include_system_rows);
                const ImportanceScores scores = query_importance(map);
                selection = effective == Selector::kTds ? tds_select(scores, record.k_l, cfg.tds, max_chunk)
                                                        : plain_select(scores, record.k_l);
            }
            record.pruned_ids = std::move(selection.pruned);

            std::vector<std::size_t> keep;
            keep.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::binary_search(record.pruned_ids.begin(), record.pruned_ids.end(), current.tokens[i].id)) {
                    keep.push_back(i);
                }
            }
            current = current.subset(keep);
        }
        trace.layers.push_back(std::move(record));
    }
    return trace;
}

PruneTrace run_with_pruning(const InterleavedSequence& seq, const ToyDecoder& model, const RunConfig& cfg,
                            const AttentionObserver& observer) {
    require(cfg.schedule.layers == model.layers(), ErrorKind::kInvalidInput,
            "run: schedule layer count does not match the model");
    require(seq.embeddings.cols() == model.dim(), ErrorKind::kInvalidInput,
            "run: sequence width does not match the model");

    MatrixF hidden;
    std::vector<TokenId> hidden_ids;
    AttentionProvider provider = [&](std::size_t layer, const InterleavedSequence& survivors) {
        const std::vector<TokenId> ids = ids_of(survivors);
        if (layer == 0) {
            hidden = model.embed(survivors.embeddings, positions_of(survivors));
        } else if (ids != hidden_ids) {
            // Survivors are an ordered subsequence of the previous layer's tokens.
            std::vector<std::size_t> keep;
            std::size_t j = 0;
            for (std::size_t i = 0; i < hidden_ids.size() && j < ids.size(); ++i) {
                if (hidden_ids[i] == ids[j]) {
                    keep.push_back(i);
                    ++j;
                }
            }
            require(j == ids.size(), ErrorKind::kInvalidInput, "run: survivors are not a subsequence");
            hidden = hidden.select_rows(keep);
        }
        hidden_ids = ids;
        return model.forward_layer(layer, hidden);
    };
    return run_pipeline(seq, cfg, provider, observer);
}

PruneTrace run_with_injected_attention(const InterleavedSequence& seq, const AttentionSource& source,
                                       const RunConfig& cfg, const AttentionObserver& observer) {
    AttentionProvider provider = [&](std::size_t layer, const InterleavedSequence& survivors) {
        return reindex_attention(source(layer), ids_of(survivors));
    };
    return run_pipeline(seq, cfg, provider, observer);
}

}  // namespace avprune
