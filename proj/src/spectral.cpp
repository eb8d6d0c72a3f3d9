#include "cosimo/spectral.hpp"

#include "cosimo/errors.hpp"
#include "cosimo/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace cosimo {

std::string to_string(OperatorTag tag) {
    switch (tag) {
        case OperatorTag::Lower: return "down";
        case OperatorTag::Upper: return "up";
        case OperatorTag::Full: return "full";
    }
    return "full";
}

OperatorTag parse_operator_tag(const std::string& name) {
    if (name == "down" || name == "lower") return OperatorTag::Lower;
    if (name == "up" || name == "upper") return OperatorTag::Upper;
    if (name == "full") return OperatorTag::Full;
    throw DomainError("unknown operator '" + name + "' (expected down, up or full)");
}

const Eigen::MatrixXd& select_operator(const HodgeOperators& ops, OperatorTag tag) {
    switch (tag) {
        case OperatorTag::Lower: return ops.lower;
        case OperatorTag::Upper: return ops.upper;
        case OperatorTag::Full: return ops.full;
    }
    return ops.full;
}

std::string to_string(TruncationPolicy policy) {
    return policy == TruncationPolicy::LowFrequency ? "low-frequency" : "high-frequency";
}

TruncationPolicy parse_truncation_policy(const std::string& name) {
    if (name == "low-frequency") return TruncationPolicy::LowFrequency;
    if (name == "high-frequency") return TruncationPolicy::HighFrequency;
    throw DomainError("unknown truncation policy '" + name + "' (expected low-frequency or high-frequency)");
}

HodgeSpectrum eig_sym(const Eigen::MatrixXd& l, OperatorTag source) {
    if (l.rows() != l.cols())
        throw DimensionError("eig_sym: matrix is " + std::to_string(l.rows()) + "x" + std::to_string(l.cols()));
    const double asym = l.size() ? (l - l.transpose()).cwiseAbs().maxCoeff() : 0.0;
    const double scale = std::max(1.0, l.size() ? l.cwiseAbs().maxCoeff() : 0.0);
    if (!(asym <= 1e-12 * scale))
        throw SymmetryError("eig_sym: matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");

    const Eigen::MatrixXd sym = 0.5 * (l + l.transpose());
    const auto raw = linalg::jacobi_eigen(sym);
    const Eigen::Index n = l.rows();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return raw.values(a) < raw.values(b); });

    HodgeSpectrum out;
    out.source = source;
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        out.eigenvalues(j) = raw.values(order[j]);
        Eigen::VectorXd v = raw.vectors.col(order[j]);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(v(i)) > 1e-10) {
                if (v(i) < 0) v = -v;
                break;
            }
        }
        out.eigenvectors.col(j) = v;
    }
    return out;
}

TruncatedSpectrum truncate(const HodgeSpectrum& spectrum, int k, TruncationPolicy policy) {
    const int n = static_cast<int>(spectrum.size());
    if (!(n == 0 && k == 0) && (k < 1 || k > n))
        throw DomainError("truncate: K = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    TruncatedSpectrum out;
    out.k = k;
    out.policy = policy;
    out.source = spectrum.source;
    const int first = policy == TruncationPolicy::LowFrequency ? 0 : n - k;
    out.indices.resize(k);
    std::iota(out.indices.begin(), out.indices.end(), first);
    out.values = spectrum.eigenvalues.segment(first, k);
    out.vectors = spectrum.eigenvectors.middleCols(first, k);
    return out;
}

TruncatedSpectrum full(const HodgeSpectrum& spectrum) {
    return truncate(spectrum, static_cast<int>(spectrum.size()));
}

Eigen::MatrixXd exp_filter(const TruncatedSpectrum& spectrum, double t, const Eigen::MatrixXd& x) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("exp_filter: diffusion time must be finite and >= 0");
    if (x.rows() != spectrum.size())
        throw DimensionError("exp_filter: signal has " + std::to_string(x.rows()) + " rows, operator has " +
                             std::to_string(spectrum.size()));
    Eigen::MatrixXd coeffs = spectrum.vectors.transpose() * x;
    const Eigen::VectorXd gain = (-t * spectrum.values.array()).exp();
    coeffs = gain.asDiagonal() * coeffs;
    return spectrum.vectors * coeffs;
}

Eigen::MatrixXd exp_filter(const TruncatedSpectrum& spectrum, double t, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& w) {
    if (w.rows() != x.cols())
        throw DimensionError("exp_filter: weight has " + std::to_string(w.rows()) + " rows, signal has " +
                             std::to_string(x.cols()) + " features");
    return exp_filter(spectrum, t, x) * w;
}

Eigen::MatrixXd matrix_exp_oracle(const Eigen::MatrixXd& l, double t) {
    if (l.rows() != l.cols()) throw DimensionError("matrix_exp_oracle: matrix is not square");
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("matrix_exp_oracle: t must be finite and >= 0");
    const Eigen::Index n = l.rows();
    const Eigen::MatrixXd a = -t * l;
    const double norm1 = n ? a.cwiseAbs().colwise().sum().maxCoeff() : 0.0;
    if (!std::isfinite(norm1)) throw DomainError("matrix_exp_oracle: norm of -tL overflows");
    int squarings = 0;
    if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
    if (squarings > 1000) throw DomainError("matrix_exp_oracle: norm of -tL too large");
    const Eigen::MatrixXd b = a / std::ldexp(1.0, squarings);

    Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= 60; ++k) {
        term = term * b / static_cast<double>(k);
        sum += term;
        if (term.cwiseAbs().maxCoeff() <= 1e-18 * sum.cwiseAbs().maxCoeff()) break;
    }
    for (int i = 0; i < squarings; ++i) sum = sum * sum;
    return sum;
}

LevelSpectra level_spectra(const HodgeOperators& ops, int k_lower, int k_upper, TruncationPolicy policy) {
    LevelSpectra out;
    out.level = ops.level;
    out.has_lower = ops.has_lower;
    const auto pick = [&](const Eigen::MatrixXd& l, OperatorTag tag, int k) {
        const auto spectrum = eig_sym(l, tag);
        return k > 0 ? truncate(spectrum, k, policy) : truncate(spectrum, static_cast<int>(spectrum.size()), policy);
    };
    if (ops.has_lower) out.lower = pick(ops.lower, OperatorTag::Lower, k_lower);
    out.upper = pick(ops.upper, OperatorTag::Upper, k_upper);
    return out;
}

Eigen::VectorXd cosimo_filter(const LevelSpectra& spectra, const Eigen::VectorXd& x_d, const Eigen::VectorXd& x_u,
                              const Eigen::VectorXd& x_0, double t_d, double t_u) {
    const Eigen::Index n = spectra.size();
    if (x_u.size() != n || x_0.size() != n)
        throw DimensionError("cosimo_filter: signals must have " + std::to_string(n) + " entries");
    Eigen::VectorXd out = exp_filter(spectra.upper, t_u, x_u) + exp_filter(spectra.upper, t_u, x_0);
    if (spectra.has_lower) {
        if (x_d.size() != n) throw DimensionError("cosimo_filter: lower signal must have " + std::to_string(n) + " entries");
        out += exp_filter(spectra.lower, t_d, x_d) + exp_filter(spectra.lower, t_d, x_0);
    } else if (x_d.size() != 0 && x_d.size() != n) {
        throw DimensionError("cosimo_filter: lower signal has the wrong size");
    } else if (t_d < 0.0) {
        throw DomainError("cosimo_filter: diffusion time must be >= 0");
    }
    return out;
}

Eigen::VectorXd integrate_diffusion(const Eigen::MatrixXd& l, const Eigen::VectorXd& x0, double t_end, double dt) {
    if (l.rows() != l.cols() || l.rows() != x0.size()) throw DimensionError("integrate_diffusion: shape mismatch");
    if (!(dt > 0.0)) throw DomainError("integrate_diffusion: dt must be > 0");
    if (!(t_end >= 0.0)) throw DomainError("integrate_diffusion: t_end must be >= 0");
    const double lambda_max = l.size() ? eig_sym(l).eigenvalues.maxCoeff() : 0.0;
    if (lambda_max > 0.0 && dt >= 2.0 / lambda_max) {
        std::ostringstream msg;
        msg << "integrate_diffusion: dt = " << dt << " is unstable, need dt < 2/lambda_max = " << 2.0 / lambda_max;
        throw DomainError(msg.str());
    }
    const long steps = static_cast<long>(std::ceil(t_end / dt - 1e-12));
    Eigen::VectorXd x = x0;
    if (steps <= 0) return x;
    const double h = t_end / static_cast<double>(steps);
    for (long i = 0; i < steps; ++i) x -= h * (l * x);
    return x;
}

using nlohmann::json;

std::string spectrum_to_json(const HodgeSpectrum& spectrum, std::uint64_t laplacian_checksum) {
    const Eigen::Index n = spectrum.size();
    json j;
    j["operator"] = to_string(spectrum.source);
    j["size"] = n;
    j["checksum"] = laplacian_checksum;
    j["eigenvalues"] = std::vector<double>(spectrum.eigenvalues.data(), spectrum.eigenvalues.data() + n);
    std::vector<double> rows;
    rows.reserve(static_cast<std::size_t>(n * n));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < n; ++c) rows.push_back(spectrum.eigenvectors(i, c));
    j["eigenvectors"] = rows;
    return j.dump() + "\n";
}

HodgeSpectrum spectrum_from_json(const std::string& text, const Eigen::MatrixXd& laplacian) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw StaleCacheError(std::string("spectrum cache unreadable: ") + e.what());
    }
    try {
        if (j.at("checksum").get<std::uint64_t>() != linalg::checksum(laplacian))
            throw StaleCacheError("spectrum cache checksum does not match the operator");
        const auto n = j.at("size").get<Eigen::Index>();
        const auto values = j.at("eigenvalues").get<std::vector<double>>();
        const auto rows = j.at("eigenvectors").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(values.size()) != n || static_cast<Eigen::Index>(rows.size()) != n * n)
            throw StaleCacheError("spectrum cache has inconsistent sizes");
        HodgeSpectrum out;
        out.source = parse_operator_tag(j.at("operator").get<std::string>());
        out.eigenvalues = Eigen::Map<const Eigen::VectorXd>(values.data(), n);
        out.eigenvectors.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index c = 0; c < n; ++c) out.eigenvectors(i, c) = rows[static_cast<std::size_t>(i * n + c)];
        return out;
    } catch (const json::exception& e) {
        throw StaleCacheError(std::string("spectrum cache malformed: ") + e.what());
    }
}

void save_spectrum(const HodgeSpectrum& spectrum, const Eigen::MatrixXd& laplacian, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << spectrum_to_json(spectrum, linalg::checksum(laplacian));
}

HodgeSpectrum load_spectrum(const std::filesystem::path& path, const Eigen::MatrixXd& laplacian) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingCacheError("no spectrum cache at " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return spectrum_from_json(buf.str(), laplacian);
}

HodgeSpectrum cached_spectrum(const Eigen::MatrixXd& laplacian, OperatorTag tag, const std::filesystem::path& path) {
    try {
        return load_spectrum(path, laplacian);
    } catch (const MissingCacheError&) {
    } catch (const StaleCacheError&) {
    }
    auto spectrum = eig_sym(laplacian, tag);
    save_spectrum(spectrum, laplacian, path);
    return spectrum;
}

}  // namespace cosimo
