#ifndef FTS_NETWORK_HPP
#define FTS_NETWORK_HPP

#include "fts/common.hpp"
#include "fts/dynamics.hpp"

#include <string>
#include <vector>

namespace fts {

/// Scalar-output MLP V(t, x) with softplus hidden layers and a linear output.
/// The input is [t; x], so layer_dims.front() == n + 1 and layer_dims.back() == 1.
///
/// All parameters live in one flat vector: for each layer the weight matrix
/// (out x in, column-major) followed by the bias vector. The optimizer works
/// on that vector directly.
class LyapunovNet {
 public:
  LyapunovNet() = default;
  explicit LyapunovNet(std::vector<int> layer_dims);

  const std::vector<int>& layer_dims() const { return dims_; }
  int state_dim() const { return dims_.front() - 1; }
  int n_layers() const { return static_cast<int>(dims_.size()) - 1; }
  std::size_t param_count() const { return static_cast<std::size_t>(params_.size()); }

  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  Eigen::Map<const Mat> weight(int layer) const;
  Eigen::Map<Mat> weight(int layer);
  Eigen::Map<const Vec> bias(int layer) const;
  Eigen::Map<Vec> bias(int layer);

  std::uint64_t rng_seed = 0;
  std::string config_digest;

 private:
  std::size_t weight_offset(int layer) const { return offsets_[layer]; }
  std::size_t bias_offset(int layer) const {
    return offsets_[layer] + static_cast<std::size_t>(dims_[layer + 1]) * dims_[layer];
  }

  std::vector<int> dims_;
  std::vector<std::size_t> offsets_;
  Vec params_;
};

struct InputGradient {
  double dv_dt = 0.0;
  Vec dv_dx;
};

/// Same flat layout as LyapunovNet::params().
struct ParamGradient {
  Vec flat;
};

/// Throws InputError unless dims = [n+1, h1, ..., hk, 1] with n >= 1, k >= 1.
void validate_layer_dims(const std::vector<int>& dims);

/// Glorot-uniform weights, zero biases.
LyapunovNet init_net(const std::vector<int>& layer_dims, std::uint64_t rng_seed);

double softplus(double z);
double sigmoid(double z);

double forward(const LyapunovNet& net, double t, const Vec& x);
InputGradient input_gradient(const LyapunovNet& net, double t, const Vec& x);
/// dV/dt + (dV/dx) . f(t, x)
double orbital_derivative(const LyapunovNet& net, const VectorField& sys,
                          double t, const Vec& x);

/// Values at every column of `inputs` ([t; x] per column).
Eigen::RowVectorXd forward_batch(const LyapunovNet& net, const Mat& inputs);
/// Orbital derivatives at every column, via the forward tangent along [1; f].
Eigen::RowVectorXd orbital_derivative_batch(const LyapunovNet& net,
                                            const VectorField& sys,
                                            const Mat& inputs);
/// Columns [1; f(t_j, x_j)].
Mat field_directions(const VectorField& sys, const Mat& inputs);

/// Cached forward pass over a batch. With directions, also carries the
/// forward tangent (directional derivative of every activation along the
/// given input direction), so `tangent` holds dV along that direction.
struct ForwardTape {
  bool with_tangent = false;
  std::vector<Mat> act;    // act[0] = inputs, act[l] = hidden layer l output
  std::vector<Mat> sig;    // sigmoid of pre-activations, hidden layers
  std::vector<Mat> tpre;   // tangent of pre-activations, hidden layers
  std::vector<Mat> tact;   // tact[0] = directions, tact[l] = tangent of act[l]
  Eigen::RowVectorXd value;
  Eigen::RowVectorXd tangent;
};

ForwardTape forward_tape(const LyapunovNet& net, const Mat& inputs,
                         const Mat* directions = nullptr);

/// Reverse pass through a tape: returns sum_j value_adj_j dV_j/dtheta +
/// tangent_adj_j dVdot_j/dtheta. The tangent path differentiates through the
/// input-derivative computation (mixed second derivatives).
ParamGradient backprop(const LyapunovNet& net, const ForwardTape& tape,
                       const Eigen::RowVectorXd& value_adj,
                       const Eigen::RowVectorXd* tangent_adj = nullptr);

class CheckpointVersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Checkpoint file: JSON text, doubles written with 17 significant digits.
void save_checkpoint(const LyapunovNet& net, const std::string& path);
LyapunovNet load_checkpoint(const std::string& path);
std::string checkpoint_to_string(const LyapunovNet& net);
LyapunovNet checkpoint_from_string(const std::string& text);

inline constexpr int kCheckpointFormatVersion = 1;

}  // namespace fts

#endif  // FTS_NETWORK_HPP
