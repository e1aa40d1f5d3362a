#include <gtest/gtest.h>

#include "odma_ura/channel.hpp"
#include "odma_ura/fec/scl.hpp"
#include "odma_ura/transmitter.hpp"

using namespace odma_ura;

namespace {

SystemConfig small_cfg() {
    SystemConfig c;
    c.n = 400;
    c.B = 40;
    c.Bp = 8;
    c.np = 32;
    c.np_prime = 64;
    c.nc = 128;
    c.nd = 64;
    c.seed = 21;
    return c;
}

Bits random_bits(CounterRng& rng, std::size_t n) {
    Bits b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng.bit());
    return b;
}

struct Fixture {
    SystemConfig cfg = small_cfg();
    CodebookSet books = build_codebooks(cfg);
    fec::PolarCodeSpec code = make_code(cfg);
};

}  // namespace

TEST(SplitMessage, IndexExamples) {
    Bits zeros(10, 0);
    EXPECT_EQ(split_message(zeros, 10, 3).ind, 1u);
    Bits ones(10, 0);
    ones[0] = ones[1] = ones[2] = 1;
    EXPECT_EQ(split_message(ones, 10, 3).ind, 8u);

    Bits b(100, 0);
    b[15] = 1;
    const auto m = split_message(b, 100, 15);
    EXPECT_EQ(m.ind, 1u);
    EXPECT_EQ(m.md, Bits(b.begin() + 15, b.end()));
}

TEST(SplitMessage, PartsConcatenateBack) {
    CounterRng rng(1);
    for (int t = 0; t < 100; ++t) {
        const auto bits = random_bits(rng, 100);
        const auto m = split_message(bits, 100, 15);
        Bits joined(m.mp);
        joined.insert(joined.end(), m.md.begin(), m.md.end());
        EXPECT_EQ(joined, bits);
        EXPECT_GE(m.ind, 1u);
        EXPECT_LE(m.ind, 1u << 15);
        EXPECT_EQ(index_to_bits(m.ind - 1, 15), m.mp);
    }
    EXPECT_THROW(split_message(Bits(99, 0), 100, 15), InvalidArgument);
}

TEST(EncodeUser, FrameLayoutAndEnergy) {
    Fixture f;
    CounterRng rng(2);
    for (int t = 0; t < 20; ++t) {
        const auto msg = split_message(random_bits(rng, 40), f.cfg);
        const auto frame = encode_user(msg, f.books, f.code, f.cfg);
        EXPECT_NEAR(frame.energy(), f.cfg.np * f.cfg.Pp + f.cfg.nd * f.cfg.Pd, 1e-9);

        CVector rest = frame.signal;
        for (std::size_t k = 0; k < frame.pilot_rows.size(); ++k) {
            EXPECT_EQ(frame.signal(frame.pilot_rows[k]),
                      f.books.pilot.A(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(msg.column())));
            rest(frame.pilot_rows[k]) = 0;
        }
        const double a = std::sqrt(f.cfg.Pd / 2);
        for (const auto r : frame.data_rows) {
            EXPECT_GE(r, static_cast<std::uint32_t>(f.cfg.np_prime));
            EXPECT_NEAR(std::abs(frame.signal(r).real()), a, 1e-12);
            EXPECT_NEAR(std::abs(frame.signal(r).imag()), a, 1e-12);
            rest(r) = 0;
        }
        EXPECT_EQ(rest.squaredNorm(), 0.0);
    }
}

TEST(EncodeUser, DataSymbolsDecodeBack) {
    Fixture f;
    CounterRng rng(3);
    const auto msg = split_message(random_bits(rng, 40), f.cfg);
    const auto frame = encode_user(msg, f.books, f.code, f.cfg);
    CVector sym(static_cast<Eigen::Index>(frame.data_rows.size()));
    for (std::size_t k = 0; k < frame.data_rows.size(); ++k) sym(static_cast<Eigen::Index>(k)) = frame.signal(frame.data_rows[k]);
    const auto codeword = fec::qpsk_hard_demap(sym);
    std::vector<double> llr(codeword.size());
    for (std::size_t i = 0; i < llr.size(); ++i) llr[i] = codeword[i] ? -20.0 : 20.0;
    const auto res = fec::scl_decode(f.code, llr, 4);
    ASSERT_TRUE(res.pass);
    EXPECT_EQ(Bits(res.info_bits.begin(), res.info_bits.begin() + f.cfg.payload_bits()), msg.md);
}

TEST(EncodeUser, CollidingUsersShareSupports) {
    Fixture f;
    CounterRng rng(4);
    auto b1 = random_bits(rng, 40), b2 = random_bits(rng, 40);
    std::copy(b1.begin(), b1.begin() + f.cfg.Bp, b2.begin());
    const auto f1 = encode_user(split_message(b1, f.cfg), f.books, f.code, f.cfg);
    const auto f2 = encode_user(split_message(b2, f.cfg), f.books, f.code, f.cfg);
    EXPECT_EQ(f1.pilot_rows, f2.pilot_rows);
    EXPECT_EQ(f1.data_rows, f2.data_rows);
    EXPECT_EQ(f1.signal.head(f.cfg.np_prime), f2.signal.head(f.cfg.np_prime));
    EXPECT_NE(f1.signal.tail(f.cfg.n - f.cfg.np_prime), f2.signal.tail(f.cfg.n - f.cfg.np_prime));
}

TEST(EncodeUser, ZeroDataPowerLeavesPilotOnly) {
    Fixture f;
    CounterRng rng(5);
    const auto msg = split_message(random_bits(rng, 40), f.cfg);
    auto zero = f.cfg;
    zero.Pd = 0.0;
    const auto with = encode_user(msg, f.books, f.code, f.cfg);
    const auto without = encode_user(msg, f.books, f.code, zero);
    EXPECT_EQ(without.signal.head(f.cfg.np_prime), with.signal.head(f.cfg.np_prime));
    EXPECT_EQ(without.signal.tail(f.cfg.n - f.cfg.np_prime).squaredNorm(), 0.0);
}

TEST(EncodeUser, InjectiveOnMessages) {
    Fixture f;
    CounterRng rng(6);
    std::vector<std::pair<Bits, CVector>> seen;
    for (int t = 0; t < 40; ++t) {
        auto bits = random_bits(rng, 40);
        if (t % 2) std::fill(bits.begin(), bits.begin() + f.cfg.Bp, 0);  // force shared prefixes
        const auto frame = encode_user(split_message(bits, f.cfg), f.books, f.code, f.cfg);
        for (const auto& [b, s] : seen) {
            if (b != bits) EXPECT_NE(s, frame.signal);
        }
        seen.emplace_back(bits, frame.signal);
    }
}

TEST(Superimpose, IdentityChannel) {
    Fixture f;
    CounterRng rng(7);
    std::vector<TxFrame> frames{encode_user(split_message(random_bits(rng, 40), f.cfg), f.books, f.code, f.cfg)};
    const CMatrix Y = superimpose(frames, CMatrix::Ones(1, 1));
    EXPECT_EQ(CVector(Y.col(0)), frames[0].signal);
}

TEST(Superimpose, OppositeChannelsCancel) {
    Fixture f;
    CounterRng rng(8);
    const auto fr = encode_user(split_message(random_bits(rng, 40), f.cfg), f.books, f.code, f.cfg);
    std::vector<TxFrame> frames{fr, fr};
    CMatrix H(2, 3);
    H.row(0) << Complex(0.3, -1), Complex(2, 0.5), Complex(-0.7, 0.1);
    H.row(1) = -H.row(0);
    EXPECT_EQ(superimpose(frames, H).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Superimpose, MatchesEntrywiseSum) {
    Fixture f;
    CounterRng rng(9);
    std::vector<TxFrame> frames;
    for (int i = 0; i < 3; ++i) frames.push_back(encode_user(split_message(random_bits(rng, 40), f.cfg), f.books, f.code, f.cfg));
    CounterRng ch(10);
    const auto H = draw_channel(3, 4, ch).H;
    const CMatrix Y = superimpose(frames, H);
    for (Eigen::Index t = 0; t < f.cfg.n; ++t) {
        for (Eigen::Index m = 0; m < 4; ++m) {
            Complex s = 0;
            for (int i = 0; i < 3; ++i) s += frames[i].signal(t) * H(i, m);
            ASSERT_LT(std::abs(Y(t, m) - s), 1e-12);
        }
    }
}

TEST(Superimpose, LinearInEachFrame) {
    Fixture f;
    CounterRng rng(11);
    auto a = encode_user(split_message(random_bits(rng, 40), f.cfg), f.books, f.code, f.cfg);
    auto b = encode_user(split_message(random_bits(rng, 40), f.cfg), f.books, f.code, f.cfg);
    const auto c = encode_user(split_message(random_bits(rng, 40), f.cfg), f.books, f.code, f.cfg);
    CounterRng ch(12);
    const auto H = draw_channel(2, 2, ch).H;
    const Complex alpha(0.4, -1.1);
    TxFrame mix = a;
    mix.signal = alpha * a.signal + b.signal;
    std::vector<TxFrame> lhs{mix, c}, fa{a, c}, fb{b, c};
    // c enters once on the left and 1 + alpha times on the right
    const CMatrix expect = alpha * superimpose(fa, H) + superimpose(fb, H) - alpha * (c.signal * H.row(1));
    EXPECT_LT((superimpose(lhs, H) - expect).cwiseAbs().maxCoeff(), 1e-12);
}
