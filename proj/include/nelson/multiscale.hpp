#ifndef NELSON_MULTISCALE_HPP
#define NELSON_MULTISCALE_HPP

#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "nelson/derivatives.hpp"
#include "nelson/dressing.hpp"

namespace nelson {

struct ExponentFit {
    double deltaHat = std::numeric_limits<double>::quiet_NaN();
    double stderr_ = std::numeric_limits<double>::quiet_NaN();
    int points = 0;
    std::vector<int> excluded;   ///< indices of dropped (non-positive) points
    bool ok = false;
};

/// Least-squares slope of log y against -log sigma; needs at least 4 positive points.
ExponentFit fit_exponent(const std::vector<double>& sigma, const std::vector<double>& y);

/// exp(sum_m (hNew - hOld)_m (b_m - b*_m)) v by scaling and squaring.
struct WeylApplication {
    Eigen::VectorXd vector;
    double leakage = 0;   ///< |1 - ||result|| / ||v|||
    double step = 0;      ///< ||hNew - hOld||
};
WeylApplication apply_weyl_difference(const FockBasis& basis, const Eigen::VectorXd& v, const Eigen::VectorXd& hOld,
                                      const Eigen::VectorXd& hNew, double maxLeakage = 1e-8);

/// phi_hat = chi <chi, phiPrev>; chi is the ground state of the intermediate Hamiltonian.
struct Projection {
    Eigen::VectorXd phiHat;
    double difference = 0;   ///< ||phi_hat - phiPrev||
    double overlap = 0;      ///< <chi, phiPrev>
};
Projection project_previous(const Eigen::VectorXd& chi, const Eigen::VectorXd& phiPrevEmbedded);

struct SweepOptions {
    GridSpec grid;
    TruncationSpec trunc;
    SpectralOptions spectral;
    int contourSamples = 16;
    bool derivatives = true;   ///< scaling norms and third derivative per row
    int stopAfter = -1;        ///< stop (as if interrupted) after this many rows; -1 runs to the end
};

struct LedgerRow {
    int n = 0;
    double sigma = 0;
    int modes = 0;
    long long dimension = 0;
    double E = 0, EW = 0, gap = 0, gapW = 0, gapMargin = 0;
    Vec3 gradE = Vec3::Zero();
    double gradNorm = 0;
    double deltaE = 0;          ///< E_{n-1} - E_n
    double cDeltaE = 0;         ///< deltaE / (lambda^2 sigma_{n-1})
    double gradDiff = 0;        ///< |gradE_{n-1} - gradE_n|
    double psiCauchy = 0;       ///< ||psi_n - psi_{n-1}||
    double contourNorm = 0;     ///< sup over gamma_{n+1} of ||(H^W_n - z)^{-1} Gamma_i phi_n||
    std::string contourCenter;  ///< "next" (E_{n+1}) or "self" (last row)
    double phiHatDiff = std::numeric_limits<double>::quiet_NaN();   ///< ||phi_hat_{n+1} - phi_n||
    double overlap = std::numeric_limits<double>::quiet_NaN();      ///< <chi_{n+1}, phi_n>
    double overlapChain = std::numeric_limits<double>::quiet_NaN();
    double weylStep = 0, weylLeakage = 0, weylMismatch = 0;
    double n0 = 0, n1 = 0, n2 = 0, d3E = 0;
    double orthDefect = 0, spectrumMismatch = 0, topLevelWeight = 0;
    std::string status = "ok";
};

struct ScaleSweepLedger {
    ModelParams params;
    std::vector<LedgerRow> rows;
    bool complete = false;
    std::vector<std::string> flags;
};

/// sigma_n = kappa epsilon^n for n = 0..nScales on nested grids. `onRow` is called
/// with every row as soon as it is final; `resumeRows` are trusted and skipped.
ScaleSweepLedger run_sweep(const ModelParams& params, const SweepOptions& opt,
                           const std::vector<LedgerRow>& resumeRows = {},
                           const std::function<void(const LedgerRow&)>& onRow = {});

struct EnergyShiftSummary {
    double cMax = 0, cMin = 0, variation = 0;   ///< variation = cMax / cMin (1 when trivial)
    double worstIncrease = 0;                   ///< max(0, -deltaE)
};
EnergyShiftSummary energy_shift_ledger(const ScaleSweepLedger& ledger);

struct GapSummary {
    std::vector<double> margins;
    bool allPositive = true;
    ExponentFit slope;   ///< of margin vs sigma (deltaHat = -slope)
};
GapSummary gap_ledger(const ScaleSweepLedger& ledger);

struct SweepFits {
    ExponentFit n0, n1, n2, contour, d3E, psiCauchy;
};
SweepFits sweep_fits(const ScaleSweepLedger& ledger);

/// max_i sup over the circle of ||(H^W - z)^{-1} Gamma_i phi|| with centered Gamma.
double contour_quantity(const DressedScaleState& state, double center, double radius, int samples);

void write_ledger_csv(std::ostream& os, const ScaleSweepLedger& ledger);
nlohmann::json to_json(const LedgerRow& row);
LedgerRow ledger_row_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExponentFit& f);

}  // namespace nelson

#endif
