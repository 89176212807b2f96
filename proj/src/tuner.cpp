#include "dropinj/tuner.hpp"

#include <cmath>
#include <sstream>

namespace dropinj {

RateGrid::RateGrid(std::vector<double> rates) : rates_(std::move(rates))
{
    if (rates_.empty()) throw ValidationError("rate grid is empty");
    for (std::size_t i = 0; i < rates_.size(); ++i) {
        if (!(rates_[i] >= 0.0 && rates_[i] < 1.0))
            throw ValidationError("rate grid entry " + std::to_string(rates_[i]) + " outside [0, 1)");
        if (i > 0 && !(rates_[i] > rates_[i - 1]))
            throw ValidationError("rate grid must be strictly increasing (duplicate or unordered entry "
                                  + std::to_string(rates_[i]) + ")");
    }
}

RateGrid RateGrid::log_spaced(double lo, double hi, std::size_t count)
{
    if (!(lo > 0.0)) throw ValidationError("log-spaced rate grid needs a positive lower bound");
    if (count == 0) throw ValidationError("rate grid count must be positive");
    if (count == 1) return RateGrid({lo});
    std::vector<double> r(count);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < count; ++i)
        r[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    r.front() = lo;
    r.back() = hi;
    return RateGrid(std::move(r));
}

RateGrid RateGrid::linear(double lo, double hi, std::size_t count)
{
    if (count == 0) throw ValidationError("rate grid count must be positive");
    if (count == 1) return RateGrid({lo});
    std::vector<double> r(count);
    for (std::size_t i = 0; i < count; ++i)
        r[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    r.back() = hi;
    return RateGrid(std::move(r));
}

RateGrid RateGrid::parse(const std::string& text)
{
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
    if (parts.size() != 4) throw ValidationError("--rate-grid expects min,max,count,log|lin; got '" + text + "'");
    double lo = 0.0;
    double hi = 0.0;
    long count = 0;
    try {
        std::size_t pos = 0;
        lo = std::stod(parts[0], &pos);
        if (pos != parts[0].size()) throw std::invalid_argument("min");
        hi = std::stod(parts[1], &pos);
        if (pos != parts[1].size()) throw std::invalid_argument("max");
        count = std::stol(parts[2], &pos);
        if (pos != parts[2].size()) throw std::invalid_argument("count");
    } catch (const std::exception&) {
        throw ValidationError("--rate-grid has a non-numeric field: '" + text + "'");
    }
    if (count <= 0) throw ValidationError("--rate-grid count must be positive");
    if (parts[3] == "log") return log_spaced(lo, hi, static_cast<std::size_t>(count));
    if (parts[3] == "lin") return linear(lo, hi, static_cast<std::size_t>(count));
    throw ValidationError("--rate-grid spacing must be 'log' or 'lin', got '" + parts[3] + "'");
}

} // namespace dropinj
