#include "tetris/error.hpp"
#include "tetris/nn/optimizer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace tetris;
using namespace tetris::nn;

TEST(Adagrad, HandComputedSteps)
{
    OptimizerConfig c;
    c.learning_rate = 0.1;
    c.weight_decay = 0.5;
    c.adagrad_epsilon = 1e-300;  // only guards 0 / 0
    std::vector<double> theta{1.0, -2.0};
    std::vector<double> acc{0.0, 0.0};
    adagrad_step(theta, std::vector<double>{0.5, 1.0}, acc, c);
    // g = grad + wd * theta = (1.0, 0.0); acc = (1, 0); theta1 -= 0.1 * 1 / 1
    EXPECT_DOUBLE_EQ(acc[0], 1.0);
    EXPECT_DOUBLE_EQ(acc[1], 0.0);
    EXPECT_DOUBLE_EQ(theta[0], 0.9);
    EXPECT_DOUBLE_EQ(theta[1], -2.0);
    adagrad_step(theta, std::vector<double>{0.55, 3.0}, acc, c);
    // g = (0.55 + 0.45, 3 - 1) = (1, 2); acc = (2, 4)
    EXPECT_NEAR(theta[0], 0.9 - 0.1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(theta[1], -2.0 - 0.1 * 2.0 / 2.0, 1e-15);
}

TEST(AdamW, HandComputedSteps)
{
    OptimizerConfig c;
    c.kind = OptimizerKind::adamw;
    c.learning_rate = 0.01;
    c.weight_decay = 0.1;
    c.adam_epsilon = 0.0;
    std::vector<double> theta{2.0};
    std::vector<double> m{0.0};
    std::vector<double> v{0.0};
    adamw_step(theta, std::vector<double>{0.4}, m, v, 1, c);
    // decay: 2 * (1 - 0.001) = 1.998; m_hat = 0.4, v_hat = 0.16 -> step 0.01
    EXPECT_NEAR(theta[0], 1.998 - 0.01, 1e-14);
    EXPECT_NEAR(m[0], 0.04, 1e-15);
    EXPECT_NEAR(v[0], 0.00016, 1e-18);
    adamw_step(theta, std::vector<double>{-0.2}, m, v, 2, c);
    const double m2 = 0.9 * 0.04 + 0.1 * -0.2;
    const double v2 = 0.999 * 0.00016 + 0.001 * 0.04;
    const double mh = m2 / (1 - 0.81);
    const double vh = v2 / (1 - 0.999 * 0.999);
    EXPECT_NEAR(theta[0], 1.988 * (1 - 0.001) - 0.01 * mh / std::sqrt(vh), 1e-13);
}

TEST(Optimizer, StepsTensorsAndCounts)
{
    Tensor w({2}, std::vector<double>{1.0, 1.0});
    OptimizerConfig c;
    c.learning_rate = 0.5;
    Optimizer opt(c, {&w});
    w.grad()[0] = 2.0;
    w.grad()[1] = -2.0;
    opt.step();
    EXPECT_EQ(opt.steps(), 1);
    EXPECT_NEAR(w[0], 0.5, 1e-9);
    EXPECT_NEAR(w[1], 1.5, 1e-9);
    opt.zero_grad();
    EXPECT_EQ(w.grad()[0], 0.0);
}

TEST(Optimizer, RejectsBadConfigAndNonFiniteGradients)
{
    Tensor w({1});
    OptimizerConfig c;
    c.learning_rate = 0.0;
    EXPECT_THROW(Optimizer(c, {&w}), InvalidArgument);
    c.learning_rate = 0.1;
    c.weight_decay = -1.0;
    EXPECT_THROW(Optimizer(c, {&w}), InvalidArgument);
    c.weight_decay = 0.0;
    Optimizer opt(c, {&w});
    w.grad()[0] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(opt.step(), NumericalError);
}

TEST(Optimizer, ParsesNames)
{
    EXPECT_EQ(parse_optimizer("AdamW"), OptimizerKind::adamw);
    EXPECT_EQ(parse_optimizer("adagrad"), OptimizerKind::adagrad);
    EXPECT_THROW(parse_optimizer("sgd"), InvalidArgument);
}
