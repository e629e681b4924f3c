// Shared helpers and independent reference implementations for the tests.
// Nothing here calls into the library's numeric code.
#pragma once

#include "snowgt/image.hpp"
#include "snowgt/video_tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

using snowgt::Image;
using snowgt::VideoTensor;

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() /
                ("snowgt_" + tag + "_" + std::to_string(rng() % 1000000000ULL));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

inline Image random_image(std::mt19937_64& rng, std::size_t rows, std::size_t cols, std::size_t channels = 1) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(rows, cols, channels);
    for (double& v : img.values()) {
        v = u(rng);
    }
    return img;
}

inline VideoTensor random_video(std::mt19937_64& rng, std::size_t m, std::size_t n, std::size_t k,
                                std::size_t c = 1) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(m * n * k * c);
    for (double& x : v) {
        x = u(rng);
    }
    return VideoTensor(m, n, k, c, std::move(v));
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            m(i, j) = g(rng);
        }
    }
    return m;
}

// Cyclic Jacobi rotation eigenvalues of a symmetric matrix, descending.
inline std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                off += a[p][q] * a[p][q];
            }
        }
        if (off < 1e-30) {
            break;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) {
                    continue;
                }
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) {
        eig[i] = a[i][i];
    }
    std::sort(eig.begin(), eig.end(), std::greater<>());
    return eig;
}

// Singular values from the eigenvalues of M^T M.
inline std::vector<double> oracle_singular_values(const Eigen::MatrixXd& m) {
    const auto n = static_cast<std::size_t>(m.cols());
    std::vector<std::vector<double>> g(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                s += m(r, static_cast<Eigen::Index>(i)) * m(r, static_cast<Eigen::Index>(j));
            }
            g[i][j] = s;
        }
    }
    std::vector<double> eig = jacobi_eigenvalues(g);
    const std::size_t p = std::min<std::size_t>(static_cast<std::size_t>(m.rows()), n);
    eig.resize(p);
    for (double& e : eig) {
        e = std::sqrt(std::max(e, 0.0));
    }
    return eig;
}

inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t b = 0; b < n; ++b) {
        std::complex<double> acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(b * t) / static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[b] = acc;
    }
    return out;
}

inline std::vector<double> naive_idft_real(const std::vector<std::complex<double>>& X) {
    const std::size_t n = X.size();
    std::vector<double> out(n);
    for (std::size_t t = 0; t < n; ++t) {
        std::complex<double> acc = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            const double ang = 2.0 * std::numbers::pi * static_cast<double>(b * t) / static_cast<double>(n);
            acc += X[b] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[t] = acc.real() / static_cast<double>(n);
    }
    return out;
}

// Band-pass by DFT bin zeroing, using normalised frequency 2*min(b, n-b)/n.
inline std::vector<double> oracle_bandpass(const std::vector<double>& x, double low, double high) {
    auto X = naive_dft(x);
    const std::size_t n = x.size();
    for (std::size_t b = 0; b < n; ++b) {
        const double f = 2.0 * static_cast<double>(std::min(b, n - b)) / static_cast<double>(n);
        if (f < low || f > high) {
            X[b] = 0.0;
        }
    }
    return naive_idft_real(X);
}

inline double oracle_psnr(const Image& a, const Image& b) {
    double se = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
            for (std::size_t ch = 0; ch < a.channels(); ++ch) {
                const double d = a.at(r, c, ch) - b.at(r, c, ch);
                se += d * d;
            }
        }
    }
    const double mse = se / static_cast<double>(a.rows() * a.cols() * a.channels());
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(1.0 / mse);
}

inline double oracle_ssim(const Image& a, const Image& b, double c1, double c2) {
    double total = 0.0;
    const double n = static_cast<double>(a.rows() * a.cols());
    for (std::size_t ch = 0; ch < a.channels(); ++ch) {
        double sa = 0.0, sb = 0.0;
        for (std::size_t r = 0; r < a.rows(); ++r) {
            for (std::size_t c = 0; c < a.cols(); ++c) {
                sa += a.at(r, c, ch);
                sb += b.at(r, c, ch);
            }
        }
        const double ma = sa / n, mb = sb / n;
        double va = 0.0, vb = 0.0, cov = 0.0;
        for (std::size_t r = 0; r < a.rows(); ++r) {
            for (std::size_t c = 0; c < a.cols(); ++c) {
                const double da = a.at(r, c, ch) - ma;
                const double db = b.at(r, c, ch) - mb;
                va += da * da;
                vb += db * db;
                cov += da * db;
            }
        }
        va /= n;
        vb /= n;
        cov /= n;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(a.channels());
}

inline double oracle_gradient_at(const Image& img, std::size_t r, std::size_t c, double alpha) {
    auto px = [&](long rr, long cc, std::size_t ch) {
        rr = std::clamp<long>(rr, 0, static_cast<long>(img.rows()) - 1);
        cc = std::clamp<long>(cc, 0, static_cast<long>(img.cols()) - 1);
        return img.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc), ch);
    };
    const long R = static_cast<long>(r), C = static_cast<long>(c);
    double acc = 0.0;
    for (std::size_t ch = 0; ch < img.channels(); ++ch) {
        const double gx = 0.5 * (px(R, C + 1, ch) - px(R, C - 1, ch));
        const double gy = 0.5 * (px(R + 1, C, ch) - px(R - 1, C, ch));
        acc += std::sqrt(gx * gx + alpha * gy * gy);
    }
    return acc / static_cast<double>(img.channels());
}

struct OracleF {
    double precision, recall, f;
};

// Counts from raw 0/1 vectors.
inline OracleF oracle_f(const std::vector<int>& pred, const std::vector<int>& ref) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        tp += pred[i] && ref[i];
        fp += pred[i] && !ref[i];
        fn += !pred[i] && ref[i];
    }
    if (tp == 0) {
        const bool empty = fp == 0 && fn == 0;
        return {empty ? 1.0 : 0.0, empty ? 1.0 : 0.0, empty ? 1.0 : 0.0};
    }
    const double p = tp / (tp + fp), r = tp / (tp + fn);
    return {p, r, 2 * p * r / (p + r)};
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double max_abs_diff(const Image& a, const Image& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
    }
    return d;
}

inline double max_abs_diff(const VideoTensor& a, const VideoTensor& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
    }
    return d;
}

// Largest 8-bit code difference after round(v * 255).
inline int max_quantized_diff(const VideoTensor& a, const VideoTensor& b) {
    int d = 0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        const long qa = std::lround(std::clamp(a.values()[i], 0.0, 1.0) * 255.0);
        const long qb = std::lround(std::clamp(b.values()[i], 0.0, 1.0) * 255.0);
        d = std::max<int>(d, static_cast<int>(std::labs(qa - qb)));
    }
    return d;
}

} // namespace testing_support
