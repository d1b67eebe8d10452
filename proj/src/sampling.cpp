#include "daestab/sampling.hpp"

#include <cmath>
#include <random>

#include "daestab/errors.hpp"

namespace daestab {

namespace {

const int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                       31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

double radical_inverse(long index, int base) {
    double result = 0.0;
    double f = 1.0 / base;
    long i = index;
    while (i > 0) {
        result += f * (i % base);
        i /= base;
        f /= base;
    }
    return result;
}

} // namespace

HaltonSampler::HaltonSampler(int dim, unsigned seed) : dim_(dim) {
    if (dim < 1 || dim > 20)
        throw Error("HaltonSampler: dimension must be in [1, 20]");
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (int i = 0; i < dim; ++i) {
        bases_.push_back(kPrimes[i]);
        shift_.push_back(dist(rng));
    }
}

Vector HaltonSampler::next() {
    Vector p(dim_);
    for (int i = 0; i < dim_; ++i) {
        double v = radical_inverse(index_, bases_[i]) + shift_[i];
        p(i) = v - std::floor(v);
    }
    ++index_;
    return p;
}

Vector Box::map(const Vector& unit) const {
    Vector out(dim());
    for (int i = 0; i < dim(); ++i)
        out(i) = bounds[i][0] + unit(i) * (bounds[i][1] - bounds[i][0]);
    return out;
}

} // namespace daestab
