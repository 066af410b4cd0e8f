#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "specfuse/autodiff.hpp"
#include "specfuse/features.hpp"

namespace specfuse {

enum class FusionStrategy { Concat, CrossAttn, MutualCrossAttn, Gating, NoFusionSF, NoFusionSSL };

std::string to_string(FusionStrategy s);
FusionStrategy fusion_strategy_from_string(const std::string& name);

using NamedParams = std::vector<std::pair<std::string, ad::Tensor>>;

/// Linear projections that bring both streams to target_T x target_D.
struct AlignmentParams {
    ad::Tensor sf_w, sf_b;    // D_SF x D, 1 x D
    ad::Tensor ssl_w, ssl_b;  // D_SSL x D, 1 x D
    int target_T = 201;
    int target_D = 128;

    static AlignmentParams init(int sf_dim, int ssl_dim, int target_T, int target_D, Rng& rng);
    NamedParams named_params() const;
};

/// Trainable weights for one fusion strategy; only the fields that the
/// strategy uses are allocated.
struct FusionParams {
    FusionStrategy strategy = FusionStrategy::Concat;
    ad::Tensor w_q, w_k, w_v;     // attention projections, D x D
    ad::Tensor w_q2, w_k2, w_v2;  // SF->SSL direction when not shared
    bool shared_qkv = true;
    ad::Tensor out_w, out_b;  // 2D x D, 1 x D (Concat and MutualCrossAttn)
    ad::Tensor w_g;           // D x 2 (Gating)

    static FusionParams init(FusionStrategy s, int dim, Rng& rng, bool shared_qkv = true);
    NamedParams named_params() const;
};

/// Per-frame gate weights recorded when strategy = Gating; rows sum to 1.
struct GateTrace {
    std::string utt_id;
    Mat weights;  // T x 2: column 0 = w_sf, column 1 = w_ssl
};

/// Mean-pools the SF stream down to target_T frames (ratio sf.T / target_T
/// consecutive frames per output frame), then projects both streams to
/// target_D. Returns (sf_aligned, ssl_aligned).
std::pair<ad::Tensor, ad::Tensor> align(const FeatureMatrix& sf, const FeatureMatrix& ssl,
                                        const AlignmentParams& p);

ad::Tensor fuse_concat(const ad::Tensor& sf, const ad::Tensor& ssl, const FusionParams& p);

struct CrossAttnResult {
    ad::Tensor out;
    ad::Tensor attn;  // T x T, row-stochastic
};
/// Queries from SSL, keys/values from SF, residual adds SSL.
CrossAttnResult fuse_cross_attention(const ad::Tensor& sf, const ad::Tensor& ssl,
                                     const FusionParams& p);

struct MutualCrossAttnResult {
    ad::Tensor out;
    ad::Tensor attn_ssl_to_sf;
    ad::Tensor attn_sf_to_ssl;
};
MutualCrossAttnResult fuse_mutual_cross_attention(const ad::Tensor& sf, const ad::Tensor& ssl,
                                                  const FusionParams& p);

struct GatingResult {
    ad::Tensor out;
    ad::Tensor gates;  // T x 2
};
/// Per-frame convex combination with weights softmax(ssl * W_G).
GatingResult fuse_gating(const ad::Tensor& sf, const ad::Tensor& ssl, const FusionParams& p);

struct FusionOutput {
    ad::Tensor fused;
    std::optional<Mat> gates;  // populated for Gating
};
/// Strategy dispatcher; NoFusion passes the selected aligned stream through.
FusionOutput fuse(const ad::Tensor& sf, const ad::Tensor& ssl, const FusionParams& p);

}  // namespace specfuse
