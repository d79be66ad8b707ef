#include <gtest/gtest.h>

#include "flst/checkpoint.hpp"
#include "flst/mlp.hpp"

using namespace flst;

TEST(Checkpoint, RoundTripIsBitExact) {
    const Mlp net =
        mlp_init({4, 9, 3}, {Activation::Relu, Activation::Softmax}, 77);
    const auto bytes = serialize_mlp(net);
    const Mlp back = deserialize_mlp(bytes);
    EXPECT_TRUE(params_equal(net, back));
    EXPECT_EQ(net.activations, back.activations);
    // Serializing again gives identical bytes.
    EXPECT_EQ(bytes, serialize_mlp(back));
}

TEST(Checkpoint, TruncatedStreamIsDecodeErrorNotCrash) {
    const Mlp net = mlp_init({3, 5, 2}, {Activation::Tanh, Activation::Linear}, 1);
    auto bytes = serialize_mlp(net);
    for (std::size_t cut : {std::size_t{4}, std::size_t{11}, bytes.size() - 3, bytes.size() - 8}) {
        std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + cut);
        EXPECT_THROW(deserialize_mlp(truncated), DecodeError) << "cut=" << cut;
    }
}

TEST(Checkpoint, BadMagicAndVersionAreRejected) {
    const Mlp net = mlp_init({2, 2}, {Activation::Linear}, 1);
    auto bytes = serialize_mlp(net);
    auto corrupted = bytes;
    corrupted[0] = 'X';
    EXPECT_THROW(deserialize_mlp(corrupted), DecodeError);
    corrupted = bytes;
    corrupted[8] = 0xEE; // version field
    EXPECT_THROW(deserialize_mlp(corrupted), DecodeError);
    corrupted = bytes;
    corrupted.push_back(0); // trailing junk
    EXPECT_THROW(deserialize_mlp(corrupted), DecodeError);
}

TEST(Checkpoint, ArchitectureMismatchIsShapeError) {
    const Mlp net = mlp_init({2, 3}, {Activation::Linear}, 5);
    const auto bytes = serialize_mlp(net);
    EXPECT_NO_THROW(deserialize_mlp_expect(bytes, {2, 3}));
    EXPECT_THROW(deserialize_mlp_expect(bytes, {2, 4}), ShapeError);
}

TEST(Checkpoint, AgentBundleRoundTrip) {
    AgentBundle bundle;
    bundle.nets.emplace_back("actor", mlp_init({6, 4, 2},
                                               {Activation::Relu, Activation::Tanh}, 2));
    bundle.nets.emplace_back("critic", mlp_init({8, 4, 1},
                                                {Activation::Relu, Activation::Linear}, 3));
    bundle.metadata = "{\"gamma\":0.95}";
    const auto bytes = serialize_agent(bundle);
    const AgentBundle back = deserialize_agent(bytes);
    ASSERT_EQ(back.nets.size(), 2u);
    EXPECT_EQ(back.nets[0].first, "actor");
    EXPECT_EQ(back.nets[1].first, "critic");
    EXPECT_TRUE(params_equal(back.nets[0].second, bundle.nets[0].second));
    EXPECT_TRUE(params_equal(back.nets[1].second, bundle.nets[1].second));
    EXPECT_EQ(back.metadata, bundle.metadata);

    std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + bytes.size() / 2);
    EXPECT_THROW(deserialize_agent(truncated), DecodeError);
}
