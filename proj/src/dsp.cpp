#include "specfuse/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace specfuse::dsp {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::vector<double> Spectrum::power() const {
    std::vector<double> p(bins.size());
    for (size_t i = 0; i < bins.size(); ++i) p[i] = std::norm(bins[i]);
    return p;
}

Waveform preemphasize(const Waveform& w, double coeff) {
    require(!w.samples.empty(), "empty waveform");
    require(coeff >= 0.0 && coeff < 1.0, "pre-emphasis coefficient must be in [0,1), got ", coeff);
    Waveform out;
    out.sample_rate = w.sample_rate;
    out.samples.resize(w.samples.size());
    out.samples[0] = w.samples[0];
    for (size_t n = 1; n < w.samples.size(); ++n)
        out.samples[n] = w.samples[n] - coeff * w.samples[n - 1];
    return out;
}

Waveform canonicalize_length(const Waveform& w, size_t target_len) {
    require(target_len > 0, "target length must be positive");
    Waveform out;
    out.sample_rate = w.sample_rate;
    out.samples = w.samples;
    out.samples.resize(target_len, 0.0);
    return out;
}

FrameGrid frame_and_window(const Waveform& w, int win_len, int hop, Window window) {
    require(win_len >= 1 && hop >= 1, "window and hop must be positive");
    require(static_cast<size_t>(win_len) <= w.samples.size(), "signal shorter than window (len=",
            w.samples.size(), ", win=", win_len, ")");

    std::vector<double> win(win_len, 1.0);
    if (window == Window::Hamming && win_len > 1) {
        for (int n = 0; n < win_len; ++n)
            win[n] = 0.54 - 0.46 * std::cos(kTwoPi * n / (win_len - 1));
    }

    const int t_frames = frame_count(w.samples.size(), win_len, hop);
    FrameGrid grid;
    grid.win_len = win_len;
    grid.hop = hop;
    grid.frames.resize(t_frames, win_len);
    for (int t = 0; t < t_frames; ++t) {
        const double* src = w.samples.data() + static_cast<size_t>(t) * hop;
        for (int n = 0; n < win_len; ++n) grid.frames(t, n) = src[n] * win[n];
    }
    return grid;
}

void fft_inplace(std::vector<std::complex<double>>& data, bool inverse) {
    const size_t n = data.size();
    require(n > 0 && (n & (n - 1)) == 0, "fft size must be a power of two, got ", n);

    // Bit-reversal permutation.
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = data[i + k];
                const std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& x : data) x *= inv_n;
    }
}

Spectrum dft(std::span<const double> frame, int fft_size) {
    require(fft_size > 0 && (fft_size & (fft_size - 1)) == 0,
            "fft size must be a power of two, got ", fft_size);
    require(frame.size() <= static_cast<size_t>(fft_size), "frame longer than fft size (",
            frame.size(), " > ", fft_size, ")");

    std::vector<std::complex<double>> buf(fft_size, 0.0);
    for (size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
    fft_inplace(buf, false);

    Spectrum s;
    s.fft_size = fft_size;
    s.bins.assign(buf.begin(), buf.begin() + fft_size / 2 + 1);
    return s;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Mat triangular_filterbank(FilterScale scale, int n_filters, int fft_size, int sample_rate,
                          double f_min, double f_max) {
    require(n_filters >= 1, "need at least one filter");
    require(f_min >= 0.0 && f_min < f_max, "need 0 <= f_min < f_max");
    require(f_max <= sample_rate / 2.0, "f_max ", f_max, " Hz above Nyquist ", sample_rate / 2.0,
            " Hz");

    // n_filters + 2 band edges equally spaced on the chosen scale.
    std::vector<double> edges_hz(n_filters + 2);
    if (scale == FilterScale::Mel) {
        const double m_lo = hz_to_mel(f_min), m_hi = hz_to_mel(f_max);
        for (int i = 0; i < n_filters + 2; ++i)
            edges_hz[i] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (n_filters + 1));
    } else {
        for (int i = 0; i < n_filters + 2; ++i)
            edges_hz[i] = f_min + (f_max - f_min) * i / (n_filters + 1);
    }

    const int n_bins = fft_size / 2 + 1;
    const double bin_hz = static_cast<double>(sample_rate) / fft_size;
    Mat fb = Mat::Zero(n_filters, n_bins);
    for (int i = 0; i < n_filters; ++i) {
        const double lo = edges_hz[i], center = edges_hz[i + 1], hi = edges_hz[i + 2];
        for (int k = 0; k < n_bins; ++k) {
            const double f = k * bin_hz;
            double v = 0.0;
            if (f > lo && f < center)
                v = (f - lo) / (center - lo);
            else if (f >= center && f < hi)
                v = (hi - f) / (hi - center);
            fb(i, k) = v;
        }
        const double peak = fb.row(i).maxCoeff();
        require(peak > 0.0, "filter ", i, " covers no FFT bins; increase fft_size");
        fb.row(i) /= peak;
    }
    return fb;
}

int cqt_bin_count(int bins_per_octave, double f_min, double f_max) {
    require(bins_per_octave >= 1, "bins_per_octave must be >= 1");
    require(f_min > 0.0 && f_min < f_max, "need 0 < f_min < f_max");
    const int n = static_cast<int>(std::floor(bins_per_octave * std::log2(f_max / f_min)));
    return std::max(n, 1);
}

double cqt_bin_freq(int bins_per_octave, double f_min, int bin) {
    return f_min * std::pow(2.0, static_cast<double>(bin) / bins_per_octave);
}

Mat cqt(const Waveform& w, int bins_per_octave, double f_min, double f_max, int hop, int win_len) {
    require(f_max <= w.sample_rate / 2.0, "f_max ", f_max, " Hz above Nyquist");
    require(hop >= 1 && win_len >= 1, "hop and win_len must be positive");
    require(static_cast<size_t>(win_len) <= w.samples.size(), "signal shorter than window");

    const int n_bins = cqt_bin_count(bins_per_octave, f_min, f_max);
    const double q = 1.0 / (std::pow(2.0, 1.0 / bins_per_octave) - 1.0);
    const size_t len = w.samples.size();

    const size_t longest = static_cast<size_t>(std::ceil(q * w.sample_rate / f_min));
    require(longest <= len, "f_min too low for signal length (kernel ", longest, " > signal ", len,
            ")");

    const int t_frames = frame_count(len, win_len, hop);
    Mat out(t_frames, n_bins);

    // Kernels are precomputed per bin: Hamming-windowed quadrature pair,
    // normalized by the window sum so tone magnitudes are comparable
    // across bins.
    std::vector<std::vector<double>> kre(n_bins), kim(n_bins);
    std::vector<int> klen(n_bins);
    for (int k = 0; k < n_bins; ++k) {
        const double fk = cqt_bin_freq(bins_per_octave, f_min, k);
        const int nk = static_cast<int>(std::ceil(q * w.sample_rate / fk));
        klen[k] = nk;
        kre[k].resize(nk);
        kim[k].resize(nk);
        double wsum = 0.0;
        for (int n = 0; n < nk; ++n) {
            const double win = nk > 1 ? 0.54 - 0.46 * std::cos(kTwoPi * n / (nk - 1)) : 1.0;
            const double ph = kTwoPi * fk * n / w.sample_rate;
            kre[k][n] = win * std::cos(ph);
            kim[k][n] = -win * std::sin(ph);
            wsum += win;
        }
        const double inv = 1.0 / wsum;
        for (int n = 0; n < nk; ++n) {
            kre[k][n] *= inv;
            kim[k][n] *= inv;
        }
    }

    const double* x = w.samples.data();
    for (int t = 0; t < t_frames; ++t) {
        const long center = static_cast<long>(t) * hop + win_len / 2;
        for (int k = 0; k < n_bins; ++k) {
            const int nk = klen[k];
            const long start = center - nk / 2;  // signal index of kernel sample 0
            const int n0 = static_cast<int>(std::max<long>(0, -start));
            const int n1 = static_cast<int>(std::min<long>(nk, static_cast<long>(len) - start));
            double re = 0.0, im = 0.0;
            if (n1 > n0) {
                const int m = n1 - n0;
                Eigen::Map<const Eigen::VectorXd> sig(x + start + n0, m);
                re = sig.dot(Eigen::Map<const Eigen::VectorXd>(kre[k].data() + n0, m));
                im = sig.dot(Eigen::Map<const Eigen::VectorXd>(kim[k].data() + n0, m));
            }
            out(t, k) = std::sqrt(re * re + im * im);
        }
    }
    return out;
}

std::vector<double> dct2_ortho(std::span<const double> x, int n_out) {
    const int n = static_cast<int>(x.size());
    require(n >= 1, "dct input must be non-empty");
    require(n_out >= 1 && n_out <= n, "n_out must be in [1, ", n, "], got ", n_out);

    std::vector<double> out(n_out);
    const double s0 = std::sqrt(1.0 / n);
    const double sk = std::sqrt(2.0 / n);
    for (int k = 0; k < n_out; ++k) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            acc += x[i] * std::cos(std::numbers::pi * (2.0 * i + 1.0) * k / (2.0 * n));
        out[k] = (k == 0 ? s0 : sk) * acc;
    }
    return out;
}

Mat delta(const Mat& features, int reach) {
    require(reach >= 1, "delta reach must be >= 1");
    const Eigen::Index t_frames = features.rows();
    const Eigen::Index dim = features.cols();
    require(t_frames >= 1, "delta needs at least one frame");

    double denom = 0.0;
    for (int n = 1; n <= reach; ++n) denom += 2.0 * n * n;

    Mat out(t_frames, dim);
    auto clamp_row = [&](Eigen::Index t) { return std::clamp<Eigen::Index>(t, 0, t_frames - 1); };
    for (Eigen::Index t = 0; t < t_frames; ++t) {
        for (Eigen::Index d = 0; d < dim; ++d) {
            double acc = 0.0;
            for (int n = 1; n <= reach; ++n)
                acc += n * (features(clamp_row(t + n), d) - features(clamp_row(t - n), d));
            out(t, d) = acc / denom;
        }
    }
    return out;
}

}  // namespace specfuse::dsp
