#include "fts/network.hpp"

#include <cmath>
#include <random>

namespace fts {

namespace {

using Array = Eigen::ArrayXXd;

// softplus(z) = max(z, 0) + log(1 + e) and sigmoid(z) with e = exp(-|z|) in
// (0, 1], so neither branch can overflow. log(1 + e) instead of log1p(e) keeps
// the packet path vectorized; its absolute error stays at rounding level.
void softplus_and_sigmoid(const Mat& z, Mat& sp, Mat& sig) {
  Array e = (-z.array().abs()).exp();
  Array onep = 1.0 + e;
  sp = (z.array().max(0.0) + onep.log()).matrix();
  Array inv = onep.inverse();
  sig = (z.array() >= 0.0).select(inv, e * inv).matrix();
}

Mat softplus_only(const Mat& z) {
  return (z.array().max(0.0) + (1.0 + (-z.array().abs()).exp()).log()).matrix();
}

}  // namespace

void validate_layer_dims(const std::vector<int>& dims) {
  if (dims.size() < 3) {
    throw InputError("layer_dims needs an input, at least one hidden layer and an output");
  }
  if (dims.front() < 2) throw InputError("input width must be state dimension + 1 >= 2");
  if (dims.back() != 1) throw InputError("output width must be exactly 1");
  for (int d : dims) {
    if (d <= 0) throw InputError("layer widths must be positive");
  }
}

LyapunovNet::LyapunovNet(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
  validate_layer_dims(dims_);
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(total);
    total += static_cast<std::size_t>(dims_[l + 1]) * dims_[l] + dims_[l + 1];
  }
  params_ = Vec::Zero(static_cast<Eigen::Index>(total));
}

Eigen::Map<const Mat> LyapunovNet::weight(int layer) const {
  return {params_.data() + weight_offset(layer), dims_[layer + 1], dims_[layer]};
}
Eigen::Map<Mat> LyapunovNet::weight(int layer) {
  return {params_.data() + weight_offset(layer), dims_[layer + 1], dims_[layer]};
}
Eigen::Map<const Vec> LyapunovNet::bias(int layer) const {
  return {params_.data() + bias_offset(layer), dims_[layer + 1]};
}
Eigen::Map<Vec> LyapunovNet::bias(int layer) {
  return {params_.data() + bias_offset(layer), dims_[layer + 1]};
}

LyapunovNet init_net(const std::vector<int>& layer_dims, std::uint64_t rng_seed) {
  LyapunovNet net(layer_dims);
  net.rng_seed = rng_seed;
  std::mt19937_64 rng(rng_seed);
  for (int l = 0; l < net.n_layers(); ++l) {
    double limit = std::sqrt(6.0 / (layer_dims[l] + layer_dims[l + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    auto w = net.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
    }
    net.bias(l).setZero();
  }
  return net;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  double e = std::exp(-std::abs(z));
  return z >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
}

namespace {

Mat as_input(double t, const Vec& x, int n) {
  if (x.size() != n) {
    throw InputError("network expects state dimension " + std::to_string(n) +
                     ", got " + std::to_string(x.size()));
  }
  Mat in(n + 1, 1);
  in(0, 0) = t;
  in.col(0).tail(n) = x;
  return in;
}

}  // namespace

Eigen::RowVectorXd forward_batch(const LyapunovNet& net, const Mat& inputs) {
  if (inputs.rows() != net.layer_dims().front()) {
    throw InputError("batch input rows do not match network input width");
  }
  Mat a = inputs;
  const int last = net.n_layers() - 1;
  for (int l = 0; l < last; ++l) {
    Mat z = net.weight(l) * a;
    z.colwise() += net.bias(l);
    a = softplus_only(z);
  }
  Eigen::RowVectorXd v = net.weight(last) * a;
  v.array() += net.bias(last)(0);
  return v;
}

double forward(const LyapunovNet& net, double t, const Vec& x) {
  return forward_batch(net, as_input(t, x, net.state_dim()))(0);
}

ForwardTape forward_tape(const LyapunovNet& net, const Mat& inputs,
                         const Mat* directions) {
  if (inputs.rows() != net.layer_dims().front()) {
    throw InputError("batch input rows do not match network input width");
  }
  ForwardTape tape;
  tape.with_tangent = directions != nullptr;
  const int last = net.n_layers() - 1;
  tape.act.reserve(last + 1);
  tape.act.push_back(inputs);
  if (tape.with_tangent) {
    if (directions->rows() != inputs.rows() || directions->cols() != inputs.cols()) {
      throw InputError("direction batch shape does not match inputs");
    }
    tape.tact.push_back(*directions);
  }
  for (int l = 0; l < last; ++l) {
    Mat z = net.weight(l) * tape.act.back();
    z.colwise() += net.bias(l);
    Mat sp, sig;
    softplus_and_sigmoid(z, sp, sig);
    if (tape.with_tangent) {
      Mat tz = net.weight(l) * tape.tact.back();
      tape.tact.push_back((sig.array() * tz.array()).matrix());
      tape.tpre.push_back(std::move(tz));
    }
    tape.act.push_back(std::move(sp));
    tape.sig.push_back(std::move(sig));
  }
  tape.value = net.weight(last) * tape.act.back();
  tape.value.array() += net.bias(last)(0);
  if (tape.with_tangent) tape.tangent = net.weight(last) * tape.tact.back();
  return tape;
}

ParamGradient backprop(const LyapunovNet& net, const ForwardTape& tape,
                       const Eigen::RowVectorXd& value_adj,
                       const Eigen::RowVectorXd* tangent_adj) {
  const bool tangent = tangent_adj != nullptr;
  if (tangent && !tape.with_tangent) {
    throw InputError("tangent adjoint supplied for a value-only tape");
  }
  const Eigen::Index batch = tape.act.front().cols();
  if (value_adj.size() != batch || (tangent && tangent_adj->size() != batch)) {
    throw InputError("adjoint length does not match batch size");
  }

  LyapunovNet shape_view(net.layer_dims());  // gradient shares the parameter layout

  const int last = net.n_layers() - 1;
  {
    auto dw = shape_view.weight(last);
    dw.noalias() = value_adj * tape.act[last].transpose();
    if (tangent) dw.noalias() += *tangent_adj * tape.tact[last].transpose();
    shape_view.bias(last)(0) = value_adj.sum();
  }
  Mat a_adj = net.weight(last).transpose() * value_adj;
  Mat ta_adj;
  if (tangent) ta_adj = net.weight(last).transpose() * *tangent_adj;

  for (int l = last - 1; l >= 0; --l) {
    const Mat& s = tape.sig[l];
    Mat z_adj = (a_adj.array() * s.array()).matrix();
    Mat tz_adj;
    if (tangent) {
      z_adj.array() += ta_adj.array() * tape.tpre[l].array() * s.array() * (1.0 - s.array());
      tz_adj = (ta_adj.array() * s.array()).matrix();
    }
    auto dw = shape_view.weight(l);
    dw.noalias() = z_adj * tape.act[l].transpose();
    if (tangent) dw.noalias() += tz_adj * tape.tact[l].transpose();
    shape_view.bias(l) = z_adj.rowwise().sum();
    if (l > 0) {
      a_adj = net.weight(l).transpose() * z_adj;
      if (tangent) ta_adj = net.weight(l).transpose() * tz_adj;
    }
  }
  return ParamGradient{std::move(shape_view.params())};
}

InputGradient input_gradient(const LyapunovNet& net, double t, const Vec& x) {
  const int n = net.state_dim();
  ForwardTape tape = forward_tape(net, as_input(t, x, n));
  const int last = net.n_layers() - 1;
  Mat a_adj = net.weight(last).transpose();
  Vec in_adj;
  for (int l = last - 1; l >= 0; --l) {
    Mat z_adj = (a_adj.array() * tape.sig[l].array()).matrix();
    a_adj = net.weight(l).transpose() * z_adj;
  }
  in_adj = a_adj.col(0);
  return {in_adj(0), in_adj.tail(n)};
}

double orbital_derivative(const LyapunovNet& net, const VectorField& sys,
                          double t, const Vec& x) {
  InputGradient g = input_gradient(net, t, x);
  return g.dv_dt + g.dv_dx.dot(eval_field(sys, t, x));
}

Mat field_directions(const VectorField& sys, const Mat& inputs) {
  const int n = static_cast<int>(inputs.rows()) - 1;
  if (n != sys.dim) throw InputError("field dimension does not match batch");
  Mat dirs(inputs.rows(), inputs.cols());
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    dirs(0, j) = 1.0;
    dirs.col(j).tail(n) = sys.eval(inputs(0, j), inputs.col(j).tail(n));
  }
  return dirs;
}

Eigen::RowVectorXd orbital_derivative_batch(const LyapunovNet& net,
                                            const VectorField& sys,
                                            const Mat& inputs) {
  Mat dirs = field_directions(sys, inputs);
  return forward_tape(net, inputs, &dirs).tangent;
}

}  // namespace fts
