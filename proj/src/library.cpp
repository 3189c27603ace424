#include "glucosindy/library.hpp"

#include "glucosindy/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace glucosindy {

TermDescriptor TermDescriptor::constant() { return {}; }

TermDescriptor TermDescriptor::monomial(std::vector<std::pair<std::string, int>> exponents) {
    TermDescriptor t;
    t.kind = TermKind::monomial;
    t.exponents = std::move(exponents);
    t.validate();
    return t;
}

TermDescriptor TermDescriptor::trig(TrigFunction fn, double omega, std::string channel) {
    TermDescriptor t;
    t.kind = TermKind::trig;
    t.function = fn;
    t.omega = omega;
    t.channel = std::move(channel);
    t.validate();
    return t;
}

int TermDescriptor::degree() const {
    int d = 0;
    for (const auto& [name, p] : exponents) d += p;
    return d;
}

void TermDescriptor::validate() const {
    switch (kind) {
        case TermKind::constant:
            if (!exponents.empty() || !channel.empty()) throw InvalidArgument("constant term takes no parameters");
            break;
        case TermKind::monomial: {
            if (!channel.empty()) throw InvalidArgument("monomial term has a trig channel");
            std::set<std::string> seen;
            for (const auto& [name, p] : exponents) {
                if (p <= 0) throw InvalidArgument("monomial powers must be positive");
                if (!seen.insert(name).second) throw InvalidArgument(fmt::format("repeated factor '{}'", name));
            }
            if (degree() < 1) throw InvalidArgument("monomial must have total degree >= 1");
            break;
        }
        case TermKind::trig:
            if (!exponents.empty()) throw InvalidArgument("trig term has monomial exponents");
            if (!(omega > 0.0) || !std::isfinite(omega)) throw InvalidArgument("trig frequency must be positive");
            if (channel.empty()) throw InvalidArgument("trig term needs a channel");
            break;
    }
}

void LibrarySpec::validate() const {
    if (poly_degree < 0) throw InvalidArgument("poly_degree must be >= 0");
    if (channels.empty()) throw InvalidArgument("library needs at least one channel");
    std::set<std::string> unique(channels.begin(), channels.end());
    if (unique.size() != channels.size()) throw InvalidArgument("library channel names must be unique");
    if (include_trig) {
        if (trig_frequencies.empty()) throw InvalidArgument("trig_frequencies must be non-empty when trig is on");
        for (double w : trig_frequencies) {
            if (!(w > 0.0)) throw InvalidArgument("trig frequencies must be positive");
        }
    }
}

std::vector<TermDescriptor> enumerate_terms(const LibrarySpec& spec) {
    spec.validate();
    std::vector<TermDescriptor> terms{TermDescriptor::constant()};
    const auto c = spec.channels.size();

    // Non-decreasing index sequences of length d give graded lex order.
    for (int d = 1; d <= spec.poly_degree; ++d) {
        std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
        while (true) {
            std::vector<std::pair<std::string, int>> exps;
            for (auto i : idx) {
                if (!exps.empty() && exps.back().first == spec.channels[i]) {
                    ++exps.back().second;
                } else {
                    exps.emplace_back(spec.channels[i], 1);
                }
            }
            terms.push_back(TermDescriptor::monomial(std::move(exps)));

            auto k = idx.size();
            while (k > 0 && idx[k - 1] == c - 1) --k;
            if (k == 0) break;
            const auto v = idx[k - 1] + 1;
            std::fill(idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(), v);
        }
    }

    if (spec.include_trig) {
        for (const auto& ch : spec.channels) {
            for (double w : spec.trig_frequencies) {
                terms.push_back(TermDescriptor::trig(TrigFunction::sin, w, ch));
                terms.push_back(TermDescriptor::trig(TrigFunction::cos, w, ch));
            }
        }
    }
    return terms;
}

double evaluate_term(const TermDescriptor& term, std::span<const std::string> channels,
                     std::span<const double> values) {
    auto value_of = [&](const std::string& name) {
        auto it = std::find(channels.begin(), channels.end(), name);
        if (it == channels.end()) throw InvalidArgument(fmt::format("term uses unknown channel '{}'", name));
        return values[static_cast<std::size_t>(it - channels.begin())];
    };
    switch (term.kind) {
        case TermKind::constant: return 1.0;
        case TermKind::monomial: {
            double acc = 1.0;
            for (const auto& [name, p] : term.exponents) {
                const double x = value_of(name);
                for (int k = 0; k < p; ++k) acc *= x;
            }
            return acc;
        }
        case TermKind::trig: {
            const double arg = term.omega * value_of(term.channel);
            return term.function == TrigFunction::sin ? std::sin(arg) : std::cos(arg);
        }
    }
    return 0.0;
}

FeatureMatrix build_matrix(const AlignedDataset& dataset, const LibrarySpec& spec, IndexRange segment) {
    if (segment.empty() || segment.end > dataset.grid.n) {
        throw InvalidArgument(fmt::format("segment [{}, {}) outside dataset of {} samples", segment.begin,
                                          segment.end, dataset.grid.n));
    }
    std::vector<const std::vector<double>*> columns;
    for (const auto& name : spec.channels) columns.push_back(&dataset.channel(name).values());

    FeatureMatrix fm;
    fm.terms = enumerate_terms(spec);
    const auto rows = static_cast<Eigen::Index>(segment.size());
    fm.values.resize(rows, static_cast<Eigen::Index>(fm.terms.size()));

    std::vector<double> sample(spec.channels.size());
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto i = segment.begin + static_cast<std::size_t>(r);
        for (std::size_t c = 0; c < columns.size(); ++c) sample[c] = (*columns[c])[i];
        for (std::size_t j = 0; j < fm.terms.size(); ++j) {
            fm.values(r, static_cast<Eigen::Index>(j)) = evaluate_term(fm.terms[j], spec.channels, sample);
        }
    }
    return fm;
}

std::string format_real(double value) {
    auto s = fmt::format("{}", value);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string term_to_string(const TermDescriptor& term) {
    switch (term.kind) {
        case TermKind::constant: return "1";
        case TermKind::monomial: {
            std::string out;
            for (const auto& [name, p] : term.exponents) {
                if (!out.empty()) out += "·";
                out += name;
                if (p > 1) out += fmt::format("^{}", p);
            }
            return out;
        }
        case TermKind::trig:
            return fmt::format("{}({}·{})", term.function == TrigFunction::sin ? "sin" : "cos",
                               format_real(term.omega), term.channel);
    }
    return {};
}

}  // namespace glucosindy
