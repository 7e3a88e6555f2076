#pragma once

#include "rhonn/rhonn_core.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>

namespace rhonn {

using Mat15 = Eigen::Matrix<double, kBasisSize, kBasisSize>;

struct EkfConfig {
    double p0 = 10.0;
    double q = 1e-4;
    double r = 0.1;
    double zeta = 1.0;
    double weight_limit = 1e6;
    double trace_limit = 1e9;

    void validate() const {
        if (!(p0 > 0 && q >= 0 && r > 0 && zeta > 0 && weight_limit > 0 && trace_limit > 0)) {
            throw Error(ErrorKind::Config, "EKF requires p0 > 0, q >= 0, r > 0, zeta > 0");
        }
    }
};

/// d(chi)/dW for a model linear in its weights.
inline Vec15 jacobian(const Vec15& basis) { return basis; }

/// Per-neuron EKF weight learner.
class EkfLearner {
public:
    EkfLearner() : EkfLearner(EkfConfig{}) {}

    explicit EkfLearner(const EkfConfig& cfg)
        : P0_(cfg.p0 * Mat15::Identity()), P_(P0_), Q_(cfg.q * Mat15::Identity()), R_(cfg.r), zeta_(cfg.zeta),
          weight_limit_(cfg.weight_limit), trace_limit_(cfg.trace_limit) {
        cfg.validate();
    }

    EkfLearner(const Mat15& P, const Mat15& Q, double R, double zeta)
        : P0_(P), P_(P), Q_(Q), R_(R), zeta_(zeta) {}

    const Mat15& P() const { return P_; }
    const Mat15& Q() const { return Q_; }
    double R() const { return R_; }
    double zeta() const { return zeta_; }

    /// K = P H / (R + H'PH);  W += zeta K e;  P <- P - K H' P + Q, then symmetrized.
    Vec15 update(const Vec15& W, double error, const Vec15& H) {
        const Vec15 PH = P_ * H;
        const double innovation = R_ + H.dot(PH);
        if (!(innovation > 0.0) || !std::isfinite(innovation)) {
            throw Error(ErrorKind::SingularInnovation, "R + H'PH is not positive");
        }
        const Vec15 K = PH / innovation;
        Vec15 next = W + zeta_ * K * error;
        P_ = P_ - K * (H.transpose() * P_) + Q_;
        P_ = 0.5 * (P_ + P_.transpose()).eval();
        return next;
    }

    /// True when the weights or the covariance have left the trusted region.
    bool diverged(const Vec15& W) const {
        return !W.allFinite() || W.cwiseAbs().maxCoeff() > weight_limit_ || !P_.allFinite() ||
               P_.trace() > trace_limit_;
    }

    void reset() { P_ = P0_; }

private:
    Mat15 P0_;
    Mat15 P_;
    Mat15 Q_;
    double R_ = 0.1;
    double zeta_ = 1.0;
    double weight_limit_ = 1e6;
    double trace_limit_ = 1e9;
};

/// Series-parallel identifier: the RHONN is driven by measured states and
/// corrected every tick by the EKF against the plant measurement.
class Identifier {
public:
    Identifier(const RhonnModel& model, const EkfConfig& cfg) : model_(model), learners_{EkfLearner(cfg), EkfLearner(cfg), EkfLearner(cfg)} {}

    const RhonnModel& model() const { return model_; }
    RhonnModel& model() { return model_; }

    /// Prediction of the current tick's state made at the previous tick (zero before the first tick).
    const PlanarState& estimate() const { return prediction_; }
    int resets() const { return resets_; }
    const EkfLearner& learner(int neuron) const { return learners_[neuron]; }

    /// Update all three neurons against the measurement x_k.
    void observe(const PlanarState& measured) {
        if (!last_basis_) return;
        const std::array<double, 3> err{measured.vx - prediction_.vx, measured.vy - prediction_.vy,
                                        measured.yaw_rate - prediction_.yaw_rate};
        for (int i = 0; i < 3; ++i) {
            Vec15& W = model_.weights(i);
            try {
                W = learners_[i].update(W, err[i], jacobian(*last_basis_));
            } catch (const Error&) {
                reset_neuron(i);
                continue;
            }
            if (learners_[i].diverged(W)) reset_neuron(i);
        }
    }

    /// chi_{k+1} from x_k and u_k.
    const PlanarState& predict(const PlanarState& measured, const ControlCommand& u) {
        const Vec15 phi = basis_at(model_, measured, u.steer);
        prediction_ = step_with_basis(model_, phi, u);
        last_basis_ = phi;
        return prediction_;
    }

    PlanarState identify_step(const PlanarState& measured, const ControlCommand& u) {
        observe(measured);
        return predict(measured, u);
    }

private:
    void reset_neuron(int i) {
        model_.weights(i).setZero();
        learners_[i].reset();
        ++resets_;
    }

    RhonnModel model_;
    std::array<EkfLearner, 3> learners_;
    PlanarState prediction_{};
    std::optional<Vec15> last_basis_;
    int resets_ = 0;
};

} // namespace rhonn
