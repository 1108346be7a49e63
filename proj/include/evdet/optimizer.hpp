#pragma once

// Adam with bias correction, one moment pair per parameter tensor.

#include <cmath>
#include <vector>

#include "evdet/model.hpp"

namespace evdet {

template <typename S>
class AdamOptimizer {
public:
    explicit AdamOptimizer(const PairEncoderModel<S>& model, double lr, double beta1 = 0.9,
                           double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for_each_tensor(model, [&](const std::string&, const Mat<S>& t) {
            m_.push_back(Mat<S>::Zero(t.rows(), t.cols()));
            v_.push_back(Mat<S>::Zero(t.rows(), t.cols()));
        });
    }

    void step(PairEncoderModel<S>& model, const PairEncoderModel<S>& grads) {
        ++t_;
        const S bc1 = S(1.0 - std::pow(beta1_, double(t_)));
        const S bc2 = S(1.0 - std::pow(beta2_, double(t_)));
        std::size_t i = 0;
        std::vector<const Mat<S>*> gs;
        for_each_tensor(grads, [&](const std::string&, const Mat<S>& gt) { gs.push_back(&gt); });
        for_each_tensor(model, [&](const std::string&, Mat<S>& param) {
            const Mat<S>& gt = *gs[i];
            m_[i] = S(beta1_) * m_[i] + S(1.0 - beta1_) * gt;
            v_[i] = S(beta2_) * v_[i] + (S(1.0 - beta2_) * gt.array().square()).matrix();
            param.array() -=
                S(lr_) * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + S(eps_));
            ++i;
        });
    }

private:
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<Mat<S>> m_, v_;
};

}  // namespace evdet
