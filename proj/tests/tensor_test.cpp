#include "rtraj/tensor.hpp"

#include <gtest/gtest.h>

#include "rtraj/random.hpp"

using namespace rtraj;

TEST(TensorOps, AddBasic) {
    const Tensor r = add(Tensor({2}, {1, 2}), Tensor({2}, {3, 4}));
    EXPECT_EQ(r.at(0), 4);
    EXPECT_EQ(r.at(1), 6);
}

TEST(TensorOps, TanhOfZeroIsZero) {
    const Tensor r = tanh(Tensor::zeros({3}));
    for (double v : r.values()) EXPECT_EQ(v, 0.0);
}

TEST(TensorOps, MulGradIsOtherFactor) {
    Tensor a = Tensor::scalar(2.0);
    Tensor b = Tensor::scalar(3.0);
    a.set_requires_grad(true);
    mul(a, b).backward();
    EXPECT_DOUBLE_EQ(a.grad()[0], 3.0);
}

TEST(TensorOps, MatmulIdentity) {
    const Tensor id({2, 2}, {1, 0, 0, 1});
    const Tensor m({2, 2}, {1, 2, 3, 4});
    const Tensor r = matmul(id, m);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(r.at(i), m.at(i));
}

TEST(TensorOps, MatmulDotProduct) {
    const Tensor r = matmul(Tensor({1, 2}, {1, 2}), Tensor({2, 1}, {3, 4}));
    EXPECT_EQ(r.shape(), (Shape{1, 1}));
    EXPECT_DOUBLE_EQ(r.item(), 11.0);
}

TEST(TensorOps, MatmulShapeMismatchNamesBothShapes) {
    try {
        matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 2}));
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("[2,3]"), std::string::npos) << msg;
        EXPECT_NE(msg.find("[4,2]"), std::string::npos) << msg;
    }
}

TEST(TensorOps, SumAndMean) {
    EXPECT_DOUBLE_EQ(sum(Tensor({3}, {1, 2, 3})).item(), 6.0);
    EXPECT_DOUBLE_EQ(mean(Tensor({4}, {1, 2, 3, 6})).item(), 3.0);
}

TEST(TensorOps, MaxOverAxis) {
    const Tensor m({2, 2}, {1, 5, 7, 2});
    const Tensor r = max_over_axis(m, 0);
    EXPECT_EQ(r.shape(), (Shape{2}));
    EXPECT_DOUBLE_EQ(r.at(0), 7.0);
    EXPECT_DOUBLE_EQ(r.at(1), 5.0);

    const Tensor rows = max_over_axis(m, 1);
    EXPECT_DOUBLE_EQ(rows.at(0), 5.0);
    EXPECT_DOUBLE_EQ(rows.at(1), 7.0);
}

TEST(TensorOps, MaxTieRoutesGradientToLowestIndex) {
    Tensor a({2}, {3, 3});
    a.set_requires_grad(true);
    sum(max_over_axis(a, 0)).backward();
    EXPECT_DOUBLE_EQ(a.grad()[0], 1.0);
    EXPECT_DOUBLE_EQ(a.grad()[1], 0.0);
}

TEST(TensorOps, MaxAxisOutOfRange) {
    EXPECT_THROW(max_over_axis(Tensor::zeros({2, 2}), 2), ShapeError);
}

TEST(TensorOps, LogDomainError) {
    EXPECT_THROW(log(Tensor({2}, {1.0, 0.0})), NumericError);
    EXPECT_THROW(log(Tensor({1}, {-3.0})), NumericError);
}

TEST(TensorOps, BroadcastBiasAdd) {
    const Tensor h({2, 3}, {1, 2, 3, 4, 5, 6});
    const Tensor b({3}, {10, 20, 30});
    const Tensor r = add(h, b);
    EXPECT_DOUBLE_EQ(r.at(0), 11.0);
    EXPECT_DOUBLE_EQ(r.at(5), 36.0);

    // Gradient of the broadcast operand sums over the leading dimension.
    Tensor bias({3}, {0, 0, 0});
    bias.set_requires_grad(true);
    sum(add(h, bias)).backward();
    for (double g : bias.grad()) EXPECT_DOUBLE_EQ(g, 2.0);
}

TEST(TensorOps, IncompatibleBroadcastRejected) {
    EXPECT_THROW(add(Tensor::zeros({2, 3}), Tensor::zeros({2})), ShapeError);
}

TEST(TensorOps, ConcatAndGatherRows) {
    const Tensor a({1, 2}, {1, 2});
    const Tensor b({2, 2}, {3, 4, 5, 6});
    const Tensor cat = concat({a, b}, 0);
    EXPECT_EQ(cat.shape(), (Shape{3, 2}));
    EXPECT_DOUBLE_EQ(cat.at(4), 5.0);

    const Tensor side = concat({b, b}, 1);
    EXPECT_EQ(side.shape(), (Shape{2, 4}));
    EXPECT_DOUBLE_EQ(side.at(2), 3.0);

    const Tensor rows = gather_rows(cat, {2, 0});
    EXPECT_DOUBLE_EQ(rows.at(0), 5.0);
    EXPECT_DOUBLE_EQ(rows.at(2), 1.0);
}

TEST(TensorBackward, SumGradIsOnes) {
    Tensor a({3}, {1, 2, 3});
    a.set_requires_grad(true);
    sum(a).backward();
    for (double g : a.grad()) EXPECT_DOUBLE_EQ(g, 1.0);
}

TEST(TensorBackward, L2NormGradIsUnitVector) {
    Tensor a({2}, {3, 4});
    a.set_requires_grad(true);
    const Tensor n = l2_norm(a);
    EXPECT_DOUBLE_EQ(n.item(), 5.0);
    n.backward();
    EXPECT_DOUBLE_EQ(a.grad()[0], 0.6);
    EXPECT_DOUBLE_EQ(a.grad()[1], 0.8);
}

TEST(TensorBackward, L2NormGradAtOriginIsZero) {
    Tensor a = Tensor::zeros({4});
    a.set_requires_grad(true);
    l2_norm(a).backward();
    for (double g : a.grad()) EXPECT_DOUBLE_EQ(g, 0.0);
}

TEST(TensorBackward, NonScalarLossRejected) {
    Tensor a({2}, {1, 2});
    a.set_requires_grad(true);
    EXPECT_THROW(add(a, a).backward(), ShapeError);
}

TEST(TensorBackward, RepeatedBackwardAccumulates) {
    Tensor a({3}, {1, 2, 3});
    a.set_requires_grad(true);
    const Tensor loss = sum(a);
    loss.backward();
    loss.backward();
    for (double g : a.grad()) EXPECT_DOUBLE_EQ(g, 2.0);
    a.zero_grad();
    loss.backward();
    for (double g : a.grad()) EXPECT_DOUBLE_EQ(g, 1.0);
}

TEST(TensorBackward, DiamondGraphSumsBothPaths) {
    Tensor x = Tensor::scalar(3.0);
    x.set_requires_grad(true);
    // y = x*x + x -> dy/dx = 2x + 1 = 7
    add(mul(x, x), x).backward();
    EXPECT_DOUBLE_EQ(x.grad()[0], 7.0);
}

TEST(TensorGraph, TopologicalOrderVisitsInputsFirst) {
    Tensor a = Tensor::scalar(1.0);
    a.set_requires_grad(true);
    const Tensor b = mul(a, a);
    const Tensor c = add(b, a);
    const Tensor d = sum(mul(c, b));
    const Graph g = Graph::build(d);
    // Records: b, c, mul(c,b), sum -> 4, each input before its user.
    ASSERT_EQ(g.size(), 4u);
    const auto& order = g.records();
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (const auto& parent : order[i]->parents) {
            if (!parent->recorded()) continue;
            bool seen = false;
            for (std::size_t j = 0; j < i; ++j) seen |= order[j] == parent.get();
            EXPECT_TRUE(seen) << "input after user at record " << i;
        }
    }
}

TEST(TensorGraph, NoRecordingUnderNoGrad) {
    Tensor a = Tensor::scalar(2.0);
    a.set_requires_grad(true);
    NoGradGuard ng;
    const Tensor b = mul(a, a);
    EXPECT_EQ(Graph::build(b).size(), 0u);
}

TEST(TensorGraph, DetachCutsTheGraph) {
    Tensor a = Tensor::scalar(2.0);
    a.set_requires_grad(true);
    const Tensor b = mul(a, a).detach();
    EXPECT_FALSE(b.requires_grad());
    Tensor c = mul(b, b);
    EXPECT_EQ(Graph::build(c).size(), 0u);
}

TEST(TensorDeterminism, IdenticalSeedsBitIdenticalResults) {
    auto run = [] {
        Rng rng(1234);
        Tensor a({4, 4}, rng.normal_vec(16));
        Tensor b({4, 4}, rng.normal_vec(16));
        a.set_requires_grad(true);
        const Tensor loss = sum(tanh(matmul(a, b)));
        loss.backward();
        std::vector<double> out(a.grad().begin(), a.grad().end());
        out.push_back(loss.item());
        return out;
    };
    const auto r1 = run();
    const auto r2 = run();
    ASSERT_EQ(r1.size(), r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
        EXPECT_EQ(r1[i], r2[i]);  // bit-identical
    }
}

TEST(TensorInvariants, ShapeMatchesBufferLength) {
    EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), ShapeError);
    const Tensor t = Tensor::zeros({3, 5});
    EXPECT_EQ(t.size(), 15u);
}

TEST(TensorInvariants, ReshapePreservesCountAndGradient) {
    Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
    a.set_requires_grad(true);
    const Tensor r = reshape(a, {3, 2});
    EXPECT_EQ(r.shape(), (Shape{3, 2}));
    EXPECT_THROW(reshape(a, {4, 2}), ShapeError);
    sum(mul(r, r)).backward();
    EXPECT_DOUBLE_EQ(a.grad()[3], 8.0);
}
