#pragma once

#include <cmath>
#include <limits>
#include <ostream>

namespace gftperc {

// Non-negative extended real for resistances. Infinity is a tagged state,
// never an IEEE sentinel, so that 1/0 = inf and 1/inf = 0 hold exactly and
// alpha = R/(1+R) evaluates to exactly 1 on recurrent/finite branches.
class ExtReal {
public:
    constexpr ExtReal() : v_(0.0), inf_(false) {}

    static constexpr ExtReal of(double v) { return ExtReal(v, false); }
    static constexpr ExtReal infinity() { return ExtReal(0.0, true); }

    constexpr bool is_inf() const { return inf_; }

    // Finite value; calling this on infinity is a bug.
    constexpr double value() const { return v_; }

    double as_double() const {
        return inf_ ? std::numeric_limits<double>::infinity() : v_;
    }

    // 1/x with 1/0 = inf, 1/inf = 0.
    ExtReal inv() const {
        if (inf_) return of(0.0);
        if (v_ == 0.0) return infinity();
        return of(1.0 / v_);
    }

    friend ExtReal operator+(ExtReal a, ExtReal b) {
        if (a.inf_ || b.inf_) return infinity();
        return of(a.v_ + b.v_);
    }
    friend ExtReal operator+(double a, ExtReal b) { return of(a) + b; }

    friend bool operator==(ExtReal a, ExtReal b) {
        if (a.inf_ || b.inf_) return a.inf_ == b.inf_;
        return a.v_ == b.v_;
    }
    friend bool operator<(ExtReal a, ExtReal b) {
        if (a.inf_) return false;
        if (b.inf_) return true;
        return a.v_ < b.v_;
    }
    friend bool operator<=(ExtReal a, ExtReal b) { return a < b || a == b; }

    // alpha = R/(1+R), with alpha = 1 for R = inf (paper's recurrent-branch
    // convention) and alpha = 0 for R = 0 (shorted boundary).
    double alpha() const {
        if (inf_) return 1.0;
        return v_ / (1.0 + v_);
    }

    friend std::ostream& operator<<(std::ostream& os, ExtReal x) {
        if (x.inf_) return os << "inf";
        return os << x.v_;
    }

private:
    constexpr ExtReal(double v, bool inf) : v_(v), inf_(inf) {}
    double v_;
    bool inf_;
};

}  // namespace gftperc
