#include "snnrfi/ann.hpp"

#include <algorithm>
#include <cmath>

#include "snnrfi/errors.hpp"

namespace snnrfi {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;

MatrixXd as_matrix(const Grid<float>& values) {
    MatrixXd x(static_cast<Index>(values.rows()), static_cast<Index>(values.cols()));
    for (std::size_t r = 0; r < values.rows(); ++r)
        for (std::size_t c = 0; c < values.cols(); ++c) x(static_cast<Index>(r), static_cast<Index>(c)) = values(r, c);
    return x;
}

void check_width(const Network& net, const Grid<float>& values) {
    if (values.rows() != net.config().input_width) {
        throw ShapeError("ANN expects " + std::to_string(net.config().input_width) + " input rows, got " +
                         std::to_string(values.rows()));
    }
}

}  // namespace

MatrixXd ann_forward(const Network& net, const Grid<float>& values) {
    check_width(net, values);
    const auto l1 = net.hidden_layer();
    const auto l2 = net.output_layer();
    const MatrixXd x = as_matrix(values);
    const MatrixXd hidden = ((l1.weights * x).colwise() + l1.bias).cwiseMax(0.0);
    const MatrixXd logits = (l2.weights * hidden).colwise() + l2.bias;
    return logits.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
}

double ann_loss(const Network& net, const Patch& patch, Gradients* grads, double scale) {
    check_width(net, patch.values);
    const auto l1 = net.hidden_layer();
    const auto l2 = net.output_layer();
    const MatrixXd x = as_matrix(patch.values);
    const MatrixXd pre_hidden = (l1.weights * x).colwise() + l1.bias;
    const MatrixXd hidden = pre_hidden.cwiseMax(0.0);
    const MatrixXd logits = (l2.weights * hidden).colwise() + l2.bias;
    if (static_cast<std::size_t>(logits.rows()) != patch.flags.rows()) {
        throw ShapeError("ANN output width does not match the patch mask");
    }

    // An empty ignore grid means every pixel counts.
    const bool has_ignore = patch.ignore.size() != 0;
    std::size_t counted = has_ignore ? 0 : patch.flags.size();
    if (has_ignore) {
        for (auto v : patch.ignore.data()) counted += v ? 0 : 1;
    }
    if (counted == 0) return 0.0;
    const double norm = 1.0 / static_cast<double>(counted);

    // Numerically stable BCE on logits: max(z, 0) - z * y + log(1 + exp(-|z|)).
    double loss = 0.0;
    MatrixXd dlogits = MatrixXd::Zero(logits.rows(), logits.cols());
    for (Index k = 0; k < logits.rows(); ++k) {
        for (Index t = 0; t < logits.cols(); ++t) {
            const auto uk = static_cast<std::size_t>(k);
            const auto ut = static_cast<std::size_t>(t);
            if (has_ignore && patch.ignore(uk, ut)) continue;
            const double z = logits(k, t);
            const double y = patch.flags(uk, ut) ? 1.0 : 0.0;
            loss += (std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)))) * norm;
            dlogits(k, t) = (1.0 / (1.0 + std::exp(-z)) - y) * norm;
        }
    }
    if (grads) {
        const auto& cfg = net.config();
        const auto H = static_cast<Index>(cfg.hidden_width);
        const auto In = static_cast<Index>(cfg.input_width);
        const auto O = static_cast<Index>(cfg.output_width);
        double* g = grads->values.data();
        Eigen::Map<MatrixXd> gw1(g, H, In);
        Eigen::Map<Eigen::VectorXd> gb1(g + H * In, H);
        Eigen::Map<MatrixXd> gw2(g + H * In + H, O, H);
        Eigen::Map<Eigen::VectorXd> gb2(g + H * In + H + O * H, O);

        gw2.noalias() += scale * dlogits * hidden.transpose();
        gb2.noalias() += scale * dlogits.rowwise().sum();
        MatrixXd dhidden = l2.weights.transpose() * dlogits;
        dhidden = dhidden.cwiseProduct((pre_hidden.array() > 0.0).cast<double>().matrix());
        gw1.noalias() += scale * dhidden * x.transpose();
        gb1.noalias() += scale * dhidden.rowwise().sum();
    }
    return loss;
}

Decoded ann_decode(const MatrixXd& probabilities) {
    const auto rows = static_cast<std::size_t>(probabilities.rows());
    const auto cols = static_cast<std::size_t>(probabilities.cols());
    Decoded d{Grid<std::uint8_t>(rows, cols, 0), Grid<double>(rows, cols, 0.0)};
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double p = probabilities(static_cast<Index>(r), static_cast<Index>(c));
            d.flags(r, c) = p > 0.5 ? 1 : 0;
            d.scores(r, c) = p;
        }
    }
    return d;
}

TrainingHistory ann_train(Network& net, std::span<const Patch> patches, const TrainingConfig& cfg) {
    for (const auto& p : patches) check_width(net, p.values);
    return fit(net, patches.size(), cfg,
               [&](std::size_t i, Gradients* g, double scale) { return ann_loss(net, patches[i], g, scale); });
}

}  // namespace snnrfi
