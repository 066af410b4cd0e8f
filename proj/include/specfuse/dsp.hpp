#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <vector>

#include "specfuse/mat.hpp"

namespace specfuse::dsp {

/// Mono audio clip. Samples are dimensionless amplitudes.
struct Waveform {
    std::vector<double> samples;
    int sample_rate = 16000;

    size_t size() const { return samples.size(); }
    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class Window { Hamming, Rectangular };

/// Windowed analysis frames: row t covers samples [t*hop, t*hop + win_len).
struct FrameGrid {
    Mat frames;  // T x win_len
    int win_len = 0;
    int hop = 0;
};

/// One-sided spectrum of a single frame (fft_size/2 + 1 bins).
struct Spectrum {
    std::vector<std::complex<double>> bins;
    int fft_size = 0;

    /// Magnitude-squared per bin.
    std::vector<double> power() const;
};

/// y[0] = x[0]; y[n] = x[n] - coeff * x[n-1].
Waveform preemphasize(const Waveform& w, double coeff);

/// Truncate to, or zero-pad up to, exactly target_len samples.
Waveform canonicalize_length(const Waveform& w, size_t target_len);

/// Number of frames for a length/window/hop combination (requires len >= win).
inline int frame_count(size_t num_samples, int win_len, int hop) {
    return 1 + static_cast<int>((num_samples - static_cast<size_t>(win_len)) / hop);
}

FrameGrid frame_and_window(const Waveform& w, int win_len, int hop, Window window);

/// Radix-2 DFT of a real frame zero-padded to fft_size (power of two).
Spectrum dft(std::span<const double> frame, int fft_size);

/// In-place complex FFT/IFFT used by dft and by waveform-domain filtering.
/// The inverse applies the 1/N factor.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse);

inline int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

enum class FilterScale { Mel, Linear };

/// mel(f) = 2595 * log10(1 + f/700).
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters, peak value exactly 1, centers equally spaced on the
/// chosen scale between f_min and f_max. Rows: n_filters x (fft_size/2 + 1).
Mat triangular_filterbank(FilterScale scale, int n_filters, int fft_size, int sample_rate,
                          double f_min, double f_max);

/// Geometrically spaced bin count/frequency for the constant-Q transform.
int cqt_bin_count(int bins_per_octave, double f_min, double f_max);
double cqt_bin_freq(int bins_per_octave, double f_min, int bin);

/// Constant-Q magnitudes by direct correlation with windowed complex
/// exponentials. Frame t is centered at t*hop + win_len/2 so the grid lines
/// up with the STFT-based extractors; kernels are clipped at clip edges.
/// Output: frame_count(len, win_len, hop) x cqt_bin_count(...) magnitudes.
Mat cqt(const Waveform& w, int bins_per_octave, double f_min, double f_max, int hop, int win_len);

/// Orthonormal DCT-II truncated to the first n_out coefficients.
std::vector<double> dct2_ortho(std::span<const double> x, int n_out);

/// Regression deltas over a +/-reach window, boundary frames replicated.
Mat delta(const Mat& features, int reach);

/// 16-bit PCM mono RIFF reader/writer; samples scaled by 1/32768.
Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& w);

}  // namespace specfuse::dsp
