#include "specfuse/features.hpp"

#include <cmath>

namespace specfuse {

namespace {

constexpr double kLogFloor = 1e-10;

/// Appends first- and second-order deltas along the feature axis.
Mat with_derivatives(const Mat& base, int reach) {
    const Mat d1 = dsp::delta(base, reach);
    const Mat d2 = dsp::delta(d1, reach);
    Mat out(base.rows(), base.cols() * 3);
    out.leftCols(base.cols()) = base;
    out.middleCols(base.cols(), base.cols()) = d1;
    out.rightCols(base.cols()) = d2;
    return out;
}

Mat cepstra_from_filterbank(const dsp::Waveform& w, const SpectralConfig& cfg,
                            dsp::FilterScale scale) {
    const int sr = w.sample_rate;
    const int win = cfg.win_len(sr);
    const int hop = cfg.hop(sr);
    const int fft_size = dsp::next_pow2(win);

    const auto pre = dsp::preemphasize(w, cfg.preemph);
    const auto grid = dsp::frame_and_window(pre, win, hop, dsp::Window::Hamming);
    const Mat fb = dsp::triangular_filterbank(scale, cfg.n_filters, fft_size, sr, 0.0, sr / 2.0);

    const Eigen::Index t_frames = grid.frames.rows();
    Mat cepstra(t_frames, cfg.n_coeffs);
    std::vector<double> frame(win);
    std::vector<double> energies(cfg.n_filters);
    for (Eigen::Index t = 0; t < t_frames; ++t) {
        for (int n = 0; n < win; ++n) frame[n] = grid.frames(t, n);
        const auto spec = dsp::dft(frame, fft_size);
        const auto power = spec.power();
        Eigen::Map<const Eigen::VectorXd> p(power.data(), static_cast<Eigen::Index>(power.size()));
        for (int i = 0; i < cfg.n_filters; ++i)
            energies[i] = std::log(std::max(fb.row(i).dot(p), kLogFloor));
        const auto coeffs = dsp::dct2_ortho(energies, cfg.n_coeffs);
        for (int k = 0; k < cfg.n_coeffs; ++k) cepstra(t, k) = coeffs[k];
    }
    return cepstra;
}

FeatureMatrix finish(Mat base, const SpectralConfig& cfg, int sample_rate, std::string provenance) {
    FeatureMatrix f;
    f.data = cfg.with_deltas ? with_derivatives(base, cfg.delta_reach) : std::move(base);
    f.stream = Stream::SF;
    f.frame_rate = static_cast<double>(sample_rate) / cfg.hop(sample_rate);
    f.provenance = std::move(provenance);
    validate_features(f);
    return f;
}

}  // namespace

std::string to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::Mfcc: return "mfcc";
        case FeatureKind::Lfcc: return "lfcc";
        case FeatureKind::Cqcc: return "cqcc";
    }
    return "?";
}

FeatureKind feature_kind_from_string(const std::string& name) {
    if (name == "mfcc") return FeatureKind::Mfcc;
    if (name == "lfcc") return FeatureKind::Lfcc;
    if (name == "cqcc") return FeatureKind::Cqcc;
    raise("unknown feature kind: ", name);
}

void validate_features(const FeatureMatrix& f) {
    require(f.data.rows() >= 1 && f.data.cols() >= 1, "feature matrix is empty");
    require(all_finite(f.data), "feature matrix contains NaN/Inf (", f.provenance, ")");
}

FeatureMatrix extract_mfcc(const dsp::Waveform& w, const SpectralConfig& cfg) {
    require(cfg.n_coeffs >= 1 && cfg.n_coeffs <= cfg.n_filters,
            "need 1 <= n_coeffs <= n_filters");
    return finish(cepstra_from_filterbank(w, cfg, dsp::FilterScale::Mel), cfg, w.sample_rate,
                  "mfcc");
}

FeatureMatrix extract_lfcc(const dsp::Waveform& w, const SpectralConfig& cfg) {
    require(cfg.n_coeffs >= 1 && cfg.n_coeffs <= cfg.n_filters,
            "need 1 <= n_coeffs <= n_filters");
    return finish(cepstra_from_filterbank(w, cfg, dsp::FilterScale::Linear), cfg, w.sample_rate,
                  "lfcc");
}

FeatureMatrix extract_cqcc(const dsp::Waveform& w, const SpectralConfig& cfg) {
    const int sr = w.sample_rate;
    const int win = cfg.win_len(sr);
    const int hop = cfg.hop(sr);
    const double f_max = sr / 2.0;
    const double f_min = f_max / std::pow(2.0, cfg.cqt_octaves);

    const auto pre = dsp::preemphasize(w, cfg.preemph);
    const Mat mags = dsp::cqt(pre, cfg.bins_per_octave, f_min, f_max, hop, win);
    const int n_bins = static_cast<int>(mags.cols());
    require(cfg.cqcc_linear_bins >= cfg.n_coeffs, "cqcc resampling target below n_coeffs");

    // Geometric bin frequencies, then the uniform grid they are resampled to.
    std::vector<double> freq(n_bins);
    for (int k = 0; k < n_bins; ++k) freq[k] = dsp::cqt_bin_freq(cfg.bins_per_octave, f_min, k);
    const int n_lin = cfg.cqcc_linear_bins;
    std::vector<double> grid_hz(n_lin);
    for (int j = 0; j < n_lin; ++j)
        grid_hz[j] = freq.front() + (freq.back() - freq.front()) * j / (n_lin - 1);

    const Eigen::Index t_frames = mags.rows();
    Mat cepstra(t_frames, cfg.n_coeffs);
    std::vector<double> log_power(n_bins);
    std::vector<double> resampled(n_lin);
    for (Eigen::Index t = 0; t < t_frames; ++t) {
        for (int k = 0; k < n_bins; ++k) {
            const double p = mags(t, k) * mags(t, k);
            log_power[k] = std::log(std::max(p, kLogFloor));
        }
        // Linear interpolation of log power onto the uniform frequency grid.
        int k = 0;
        for (int j = 0; j < n_lin; ++j) {
            const double g = grid_hz[j];
            while (k + 1 < n_bins - 1 && freq[k + 1] <= g) ++k;
            const double span = freq[k + 1] - freq[k];
            const double a = std::clamp((g - freq[k]) / span, 0.0, 1.0);
            resampled[j] = (1.0 - a) * log_power[k] + a * log_power[k + 1];
        }
        const auto coeffs = dsp::dct2_ortho(resampled, cfg.n_coeffs);
        for (int c = 0; c < cfg.n_coeffs; ++c) cepstra(t, c) = coeffs[c];
    }
    return finish(std::move(cepstra), cfg, sr, "cqcc");
}

FeatureMatrix extract(const dsp::Waveform& w, const SpectralConfig& cfg) {
    switch (cfg.kind) {
        case FeatureKind::Mfcc: return extract_mfcc(w, cfg);
        case FeatureKind::Lfcc: return extract_lfcc(w, cfg);
        case FeatureKind::Cqcc: return extract_cqcc(w, cfg);
    }
    raise("unknown feature kind");
}

}  // namespace specfuse
