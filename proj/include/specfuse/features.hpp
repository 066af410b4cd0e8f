#pragma once

#include <string>

#include "specfuse/dsp.hpp"

namespace specfuse {

enum class FeatureKind { Mfcc, Lfcc, Cqcc };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

enum class Stream { SF, SSL };

struct SpectralConfig {
    FeatureKind kind = FeatureKind::Mfcc;
    int n_coeffs = 20;
    int n_filters = 20;
    int bins_per_octave = 96;  // CQCC only
    double win_ms = 25.0;
    double hop_ms = 10.0;
    double preemph = 0.97;
    bool with_deltas = true;
    int delta_reach = 2;
    int cqcc_linear_bins = 128;  // uniform resampling target before the DCT
    double cqt_octaves = 7.0;    // f_min = (sr/2) / 2^cqt_octaves

    int output_dim() const { return with_deltas ? 3 * n_coeffs : n_coeffs; }
    int win_len(int sample_rate) const {
        return static_cast<int>(std::lround(win_ms * 1e-3 * sample_rate));
    }
    int hop(int sample_rate) const {
        return static_cast<int>(std::lround(hop_ms * 1e-3 * sample_rate));
    }
};

/// T x D feature grid with its stream tag. Entries are always finite.
struct FeatureMatrix {
    Mat data;
    Stream stream = Stream::SF;
    double frame_rate = 100.0;
    std::string provenance;
};

/// Throws if the matrix is empty or contains NaN/Inf.
void validate_features(const FeatureMatrix& f);

FeatureMatrix extract_mfcc(const dsp::Waveform& w, const SpectralConfig& cfg);
FeatureMatrix extract_lfcc(const dsp::Waveform& w, const SpectralConfig& cfg);
FeatureMatrix extract_cqcc(const dsp::Waveform& w, const SpectralConfig& cfg);

/// Dispatch on cfg.kind.
FeatureMatrix extract(const dsp::Waveform& w, const SpectralConfig& cfg);

}  // namespace specfuse
