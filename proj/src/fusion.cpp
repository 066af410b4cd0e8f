#include "specfuse/fusion.hpp"

#include <cmath>

namespace specfuse {

namespace {

ad::Tensor init_weight(int rows, int cols, Rng& rng) {
    return ad::Tensor::leaf(uniform_matrix(rows, cols, 1.0 / std::sqrt(rows), rng), true);
}

ad::Tensor init_bias(int cols) { return ad::Tensor::leaf(Mat::Zero(1, cols), true); }

void check_pair(const ad::Tensor& sf, const ad::Tensor& ssl) {
    require(sf.rows() == ssl.rows() && sf.cols() == ssl.cols(),
            "fusion inputs must share a T x D shape, got ", sf.rows(), "x", sf.cols(), " vs ",
            ssl.rows(), "x", ssl.cols());
}

/// Softmax(Q K^T / sqrt(D)) V + residual.
std::pair<ad::Tensor, ad::Tensor> scaled_attention(const ad::Tensor& queries_from,
                                                   const ad::Tensor& keys_values_from,
                                                   const ad::Tensor& residual, const ad::Tensor& wq,
                                                   const ad::Tensor& wk, const ad::Tensor& wv) {
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(queries_from.cols()));
    auto q = ad::matmul(queries_from, wq);
    auto k = ad::matmul(keys_values_from, wk);
    auto v = ad::matmul(keys_values_from, wv);
    auto attn = ad::softmax_rows(ad::matmul(q, ad::transpose_last_two(k)), inv_sqrt_d);
    auto out = ad::add(ad::matmul(attn, v), residual);
    return {out, attn};
}

}  // namespace

std::string to_string(FusionStrategy s) {
    switch (s) {
        case FusionStrategy::Concat: return "concat";
        case FusionStrategy::CrossAttn: return "xattn";
        case FusionStrategy::MutualCrossAttn: return "mutual";
        case FusionStrategy::Gating: return "gating";
        case FusionStrategy::NoFusionSF: return "nofusion-sf";
        case FusionStrategy::NoFusionSSL: return "nofusion-ssl";
    }
    return "?";
}

FusionStrategy fusion_strategy_from_string(const std::string& name) {
    if (name == "concat") return FusionStrategy::Concat;
    if (name == "xattn") return FusionStrategy::CrossAttn;
    if (name == "mutual") return FusionStrategy::MutualCrossAttn;
    if (name == "gating") return FusionStrategy::Gating;
    if (name == "nofusion-sf") return FusionStrategy::NoFusionSF;
    if (name == "nofusion-ssl") return FusionStrategy::NoFusionSSL;
    raise("unknown fusion strategy: ", name);
}

AlignmentParams AlignmentParams::init(int sf_dim, int ssl_dim, int target_T, int target_D,
                                      Rng& rng) {
    AlignmentParams p;
    p.target_T = target_T;
    p.target_D = target_D;
    p.sf_w = init_weight(sf_dim, target_D, rng);
    p.sf_b = init_bias(target_D);
    p.ssl_w = init_weight(ssl_dim, target_D, rng);
    p.ssl_b = init_bias(target_D);
    return p;
}

NamedParams AlignmentParams::named_params() const {
    return {{"align.sf.w", sf_w}, {"align.sf.b", sf_b}, {"align.ssl.w", ssl_w},
            {"align.ssl.b", ssl_b}};
}

FusionParams FusionParams::init(FusionStrategy s, int dim, Rng& rng, bool shared_qkv) {
    FusionParams p;
    p.strategy = s;
    p.shared_qkv = shared_qkv;
    switch (s) {
        case FusionStrategy::Concat:
            p.out_w = init_weight(2 * dim, dim, rng);
            p.out_b = init_bias(dim);
            break;
        case FusionStrategy::CrossAttn:
            p.w_q = init_weight(dim, dim, rng);
            p.w_k = init_weight(dim, dim, rng);
            p.w_v = init_weight(dim, dim, rng);
            break;
        case FusionStrategy::MutualCrossAttn:
            p.w_q = init_weight(dim, dim, rng);
            p.w_k = init_weight(dim, dim, rng);
            p.w_v = init_weight(dim, dim, rng);
            if (!shared_qkv) {
                p.w_q2 = init_weight(dim, dim, rng);
                p.w_k2 = init_weight(dim, dim, rng);
                p.w_v2 = init_weight(dim, dim, rng);
            }
            p.out_w = init_weight(2 * dim, dim, rng);
            p.out_b = init_bias(dim);
            break;
        case FusionStrategy::Gating:
            p.w_g = init_weight(dim, 2, rng);
            break;
        case FusionStrategy::NoFusionSF:
        case FusionStrategy::NoFusionSSL:
            break;
    }
    return p;
}

NamedParams FusionParams::named_params() const {
    NamedParams out;
    auto push = [&out](const char* name, const ad::Tensor& t) {
        if (t.defined()) out.emplace_back(name, t);
    };
    push("fusion.w_q", w_q);
    push("fusion.w_k", w_k);
    push("fusion.w_v", w_v);
    push("fusion.w_q2", w_q2);
    push("fusion.w_k2", w_k2);
    push("fusion.w_v2", w_v2);
    push("fusion.out.w", out_w);
    push("fusion.out.b", out_b);
    push("fusion.w_g", w_g);
    return out;
}

std::pair<ad::Tensor, ad::Tensor> align(const FeatureMatrix& sf, const FeatureMatrix& ssl,
                                        const AlignmentParams& p) {
    const Eigen::Index t_sf = sf.data.rows();
    const Eigen::Index t = p.target_T;
    require(ssl.data.rows() == t, "incompatible frame rates: SSL has ", ssl.data.rows(),
            " frames, alignment expects ", t);
    require(t_sf % t == 0, "incompatible frame rates: SF frames ", t_sf,
            " not an integer multiple of ", t);
    require(sf.data.cols() == p.sf_w.rows(), "SF dim ", sf.data.cols(),
            " does not match projection in-dim ", p.sf_w.rows());
    require(ssl.data.cols() == p.ssl_w.rows(), "SSL dim ", ssl.data.cols(),
            " does not match projection in-dim ", p.ssl_w.rows());

    const Eigen::Index ratio = t_sf / t;
    Mat pooled(t, sf.data.cols());
    for (Eigen::Index i = 0; i < t; ++i)
        pooled.row(i) = sf.data.middleRows(i * ratio, ratio).colwise().mean();

    auto sf_in = ad::Tensor::leaf(std::move(pooled));
    auto ssl_in = ad::Tensor::leaf(ssl.data);
    return {ad::linear(sf_in, p.sf_w, p.sf_b), ad::linear(ssl_in, p.ssl_w, p.ssl_b)};
}

ad::Tensor fuse_concat(const ad::Tensor& sf, const ad::Tensor& ssl, const FusionParams& p) {
    check_pair(sf, ssl);
    return ad::linear(ad::concat_last_axis(sf, ssl), p.out_w, p.out_b);
}

CrossAttnResult fuse_cross_attention(const ad::Tensor& sf, const ad::Tensor& ssl,
                                     const FusionParams& p) {
    check_pair(sf, ssl);
    auto [out, attn] = scaled_attention(ssl, sf, ssl, p.w_q, p.w_k, p.w_v);
    return {out, attn};
}

MutualCrossAttnResult fuse_mutual_cross_attention(const ad::Tensor& sf, const ad::Tensor& ssl,
                                                  const FusionParams& p) {
    check_pair(sf, ssl);
    auto [h_ssl_to_sf, attn_a] = scaled_attention(ssl, sf, ssl, p.w_q, p.w_k, p.w_v);
    const auto& wq2 = p.shared_qkv ? p.w_q : p.w_q2;
    const auto& wk2 = p.shared_qkv ? p.w_k : p.w_k2;
    const auto& wv2 = p.shared_qkv ? p.w_v : p.w_v2;
    auto [h_sf_to_ssl, attn_b] = scaled_attention(sf, ssl, sf, wq2, wk2, wv2);
    auto out = ad::linear(ad::concat_last_axis(h_sf_to_ssl, h_ssl_to_sf), p.out_w, p.out_b);
    return {out, attn_a, attn_b};
}

GatingResult fuse_gating(const ad::Tensor& sf, const ad::Tensor& ssl, const FusionParams& p) {
    check_pair(sf, ssl);
    auto gates = ad::softmax_rows(ad::matmul(ssl, p.w_g));
    auto w_sf = ad::slice_cols(gates, 0, 1);
    auto w_ssl = ad::slice_cols(gates, 1, 1);
    auto fused = ad::add(ad::mul_rowwise(sf, w_sf), ad::mul_rowwise(ssl, w_ssl));
    return {fused, gates};
}

FusionOutput fuse(const ad::Tensor& sf, const ad::Tensor& ssl, const FusionParams& p) {
    switch (p.strategy) {
        case FusionStrategy::Concat: return {fuse_concat(sf, ssl, p), std::nullopt};
        case FusionStrategy::CrossAttn: return {fuse_cross_attention(sf, ssl, p).out, std::nullopt};
        case FusionStrategy::MutualCrossAttn:
            return {fuse_mutual_cross_attention(sf, ssl, p).out, std::nullopt};
        case FusionStrategy::Gating: {
            auto r = fuse_gating(sf, ssl, p);
            return {r.out, r.gates.value()};
        }
        case FusionStrategy::NoFusionSF: return {sf, std::nullopt};
        case FusionStrategy::NoFusionSSL: return {ssl, std::nullopt};
    }
    raise("unknown fusion strategy");
}

}  // namespace specfuse
