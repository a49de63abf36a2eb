#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "nsg/counterfactual/ball.hpp"
#include "nsg/digest.hpp"
#include "nsg/errors.hpp"
#include "nsg/rng.hpp"

namespace nsg {

// Trolley-style dilemmas are generated procedurally rather than ingested:
// scenarios vary along one contrast dimension, carry three binary flags, and
// put two character groups on the line. Counterfactual pairs come from
// scenarios that share the same character types and flags but differ in the
// character counts.

enum class MoralDimension { species, social_value, gender, age, fitness, utilitarianism };

inline const char* to_string(MoralDimension d) {
    switch (d) {
        case MoralDimension::species: return "species";
        case MoralDimension::social_value: return "social_value";
        case MoralDimension::gender: return "gender";
        case MoralDimension::age: return "age";
        case MoralDimension::fitness: return "fitness";
        case MoralDimension::utilitarianism: return "utilitarianism";
    }
    return "unknown";
}

struct MoralVocabulary {
    // Counterpart pairs per contrast dimension: the left character in group A
    // is mirrored by the right character in group B.
    std::map<MoralDimension, std::vector<std::pair<std::string, std::string>>> pairs;
    // Utilitarianism keeps the same characters and varies only group size.
    std::vector<std::string> utilitarian_types;
    std::map<std::string, std::string> plurals;
};

inline MoralVocabulary make_default_moral_vocabulary() {
    MoralVocabulary v;
    v.pairs[MoralDimension::gender] = {
        {"man", "woman"},
        {"boy", "girl"},
        {"elderly man", "elderly woman"},
        {"large man", "large woman"},
        {"male athlete", "female athlete"},
        {"male doctor", "female doctor"},
        {"male executive", "female executive"},
    };
    v.pairs[MoralDimension::age] = {
        {"boy", "man"},
        {"girl", "woman"},
        {"man", "elderly man"},
        {"woman", "elderly woman"},
    };
    v.pairs[MoralDimension::fitness] = {
        {"male athlete", "large man"},
        {"female athlete", "large woman"},
    };
    v.pairs[MoralDimension::social_value] = {
        {"male doctor", "criminal"},
        {"female doctor", "criminal"},
        {"male executive", "homeless person"},
        {"female executive", "homeless person"},
    };
    v.pairs[MoralDimension::species] = {
        {"man", "dog"},
        {"woman", "cat"},
        {"boy", "dog"},
        {"girl", "cat"},
    };
    v.utilitarian_types = {"man", "woman", "boy", "girl", "elderly man", "elderly woman"};
    v.plurals = {
        {"man", "men"},
        {"woman", "women"},
        {"boy", "boys"},
        {"girl", "girls"},
        {"elderly man", "elderly men"},
        {"elderly woman", "elderly women"},
        {"large man", "large men"},
        {"large woman", "large women"},
        {"male athlete", "male athletes"},
        {"female athlete", "female athletes"},
        {"male doctor", "male doctors"},
        {"female doctor", "female doctors"},
        {"male executive", "male executives"},
        {"female executive", "female executives"},
        {"homeless person", "homeless people"},
        {"criminal", "criminals"},
        {"dog", "dogs"},
        {"cat", "cats"},
    };
    return v;
}

struct MoralScenario {
    std::string scenario_id;
    MoralDimension dimension = MoralDimension::gender;
    bool is_interventionism = false;
    bool is_in_car = false;
    bool is_law = false;
    std::map<std::string, int> group_a;  // character type -> count
    std::map<std::string, int> group_b;
    std::string text_case1;
    std::string text_case2;

    // Group key: scenarios with the same dimension, flags and character-type
    // set are count variations of each other.
    std::string feature_set_key() const {
        std::string key = to_string(dimension);
        key += is_interventionism ? "|i1" : "|i0";
        key += is_in_car ? "|c1" : "|c0";
        key += is_law ? "|l1" : "|l0";
        std::vector<std::string> types;
        for (const auto& [t, _] : group_a) types.push_back(t);
        for (const auto& [t, _] : group_b) {
            if (!group_a.count(t)) types.push_back(t);
        }
        std::sort(types.begin(), types.end());
        for (const auto& t : types) {
            key += '|';
            key += t;
        }
        return key;
    }

    std::string count_signature() const {
        std::map<std::string, std::pair<int, int>> counts;
        for (const auto& [t, n] : group_a) counts[t].first = n;
        for (const auto& [t, n] : group_b) counts[t].second = n;
        std::string sig;
        for (const auto& [t, ab] : counts) {
            sig += t + ':' + std::to_string(ab.first) + '/' + std::to_string(ab.second) + ';';
        }
        return sig;
    }
};

namespace detail {

inline std::string describe_group(const std::map<std::string, int>& group,
                                  const MoralVocabulary& vocab) {
    std::vector<std::string> parts;
    for (const auto& [type, count] : group) {
        std::string noun = type;
        if (count != 1) {
            auto it = vocab.plurals.find(type);
            noun = it != vocab.plurals.end() ? it->second : type + "s";
        }
        parts.push_back(std::to_string(count) + " " + noun);
    }
    if (parts.size() == 1) return parts[0];
    std::string out;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        out += parts[i];
        if (parts.size() > 2) out += ",";
        out += " ";
    }
    out += "and " + parts.back();
    return out;
}

inline void render_scenario_text(MoralScenario& s, const MoralVocabulary& vocab) {
    const std::string list_a = describe_group(s.group_a, vocab);
    const std::string list_b = describe_group(s.group_b, vocab);

    std::string desc_a, desc_b, swerve_action, continue_action;
    const std::string law_desc = "who were flouting the law by crossing on the red signal";
    if (s.is_in_car) {
        desc_a = "who were inside the car";
        desc_b = s.is_law ? law_desc : "who were crossing ahead of the car";
        swerve_action = "will swerve and crash into a concrete barrier";
        continue_action = "will continue ahead and drive through a pedestrian crossing ahead";
    } else {
        desc_a = s.is_law ? law_desc : "who were crossing ahead of the car";
        desc_b = "who were crossing in the other lane";
        swerve_action = "will swerve and drive through a pedestrian crossing in the other lane";
        continue_action = "will continue ahead and drive through a pedestrian crossing ahead";
    }

    auto outcome = [](const std::string& action, const std::string& dies,
                      const std::string& dies_desc, const std::string& spared,
                      const std::string& spared_desc) {
        return "A self-driving car with sudden brake failure " + action +
               ". This will result in the death of " + dies + ", " + dies_desc +
               ". Meanwhile, it will spare " + spared + ", " + spared_desc + ".";
    };

    // Swerving kills the passengers (barrier) when they are in the car,
    // otherwise the other-lane pedestrians; continuing kills the group ahead.
    const std::string swerve_case =
        s.is_in_car ? outcome(swerve_action, list_a, desc_a, list_b, desc_b)
                    : outcome(swerve_action, list_b, desc_b, list_a, desc_a);
    const std::string continue_case =
        s.is_in_car ? outcome(continue_action, list_b, desc_b, list_a, desc_a)
                    : outcome(continue_action, list_a, desc_a, list_b, desc_b);

    if (s.is_interventionism) {
        s.text_case1 = swerve_case;
        s.text_case2 = continue_case;
    } else {
        s.text_case1 = continue_case;
        s.text_case2 = swerve_case;
    }
}

}  // namespace detail

inline std::string moral_question_text(const MoralScenario& s) {
    return "Case 1. " + s.text_case1 + "\n\nCase 2. " + s.text_case2;
}

inline std::vector<MoralScenario> generate_moral_scenarios(int count, std::uint64_t seed,
                                                           const MoralVocabulary& vocab) {
    if (count <= 0) throw ConfigError("moral scenario count must be positive");
    Rng rng = derive_stream(seed, "moral_scenarios");
    std::vector<MoralScenario> scenarios;
    scenarios.reserve(static_cast<std::size_t>(count));

    static constexpr MoralDimension kDimensions[] = {
        MoralDimension::species,       MoralDimension::social_value, MoralDimension::gender,
        MoralDimension::age,           MoralDimension::fitness,      MoralDimension::utilitarianism,
    };

    for (int i = 0; i < count; ++i) {
        MoralScenario s;
        s.dimension = kDimensions[rng.below(6)];
        s.is_interventionism = rng.bernoulli(0.5);
        s.is_in_car = rng.bernoulli(0.5);
        s.is_law = rng.bernoulli(0.5);

        if (s.dimension == MoralDimension::utilitarianism) {
            // Same characters on both sides; group B carries extra people.
            auto types = vocab.utilitarian_types;
            const double roll = rng.unit();
            const std::size_t k = roll < 0.5 ? 1 : (roll < 0.85 ? 2 : 3);
            rng.shuffle(types);
            types.resize(std::min(k, types.size()));
            for (const auto& t : types) {
                const int base = static_cast<int>(rng.between(1, 3));
                s.group_a[t] = base;
                s.group_b[t] = base;
            }
            const auto& bumped = types[rng.below(types.size())];
            s.group_b[bumped] += static_cast<int>(rng.between(1, 2));
        } else {
            const auto& dimension_pairs = vocab.pairs.at(s.dimension);
            const double roll = rng.unit();
            std::size_t k = roll < 0.5 ? 1 : (roll < 0.85 ? 2 : 3);
            k = std::min(k, dimension_pairs.size());
            std::vector<std::size_t> chosen = rng.sample_indices(dimension_pairs.size(), k);
            std::sort(chosen.begin(), chosen.end());
            for (std::size_t idx : chosen) {
                const auto& [left, right] = dimension_pairs[idx];
                const int total = k == 1 ? static_cast<int>(rng.between(1, 5))
                                         : (k == 2 ? static_cast<int>(rng.between(1, 2)) : 1);
                const int forward = static_cast<int>(rng.between(0, total));
                const int reversed = total - forward;
                // A mixed split puts both counterparts in each group; group B
                // is always the counterpart-swapped image of group A.
                if (forward > 0) {
                    s.group_a[left] += forward;
                    s.group_b[right] += forward;
                }
                if (reversed > 0) {
                    s.group_a[right] += reversed;
                    s.group_b[left] += reversed;
                }
            }
        }

        detail::render_scenario_text(s, vocab);
        s.scenario_id = short_digest(s.feature_set_key() + '\x1e' + s.count_signature() + '\x1e' +
                                     s.text_case1 + '\x1e' + s.text_case2);
        scenarios.push_back(std::move(s));
    }
    return scenarios;
}

// Groups scenarios by feature set and draws one counterfactual pair from
// every group that holds at least two distinct count configurations. The
// changed features are the character types whose counts differ.
inline std::vector<CounterfactualPair> pair_moral_scenarios(
    const std::vector<MoralScenario>& scenarios, std::uint64_t seed) {
    std::map<std::string, std::vector<const MoralScenario*>> groups;
    std::map<std::string, std::vector<std::string>> seen_signatures;
    for (const auto& s : scenarios) {
        const std::string key = s.feature_set_key();
        auto& sigs = seen_signatures[key];
        const std::string sig = s.count_signature();
        if (std::find(sigs.begin(), sigs.end(), sig) != sigs.end()) continue;
        sigs.push_back(sig);
        groups[key].push_back(&s);  // first scenario with each signature
    }

    std::vector<CounterfactualPair> pairs;
    for (const auto& [key, members] : groups) {
        if (members.size() < 2) continue;
        Rng rng = derive_stream(seed, "moral_pair:" + key);
        const std::size_t i = static_cast<std::size_t>(rng.below(members.size()));
        std::size_t j = static_cast<std::size_t>(rng.below(members.size() - 1));
        if (j >= i) ++j;
        const MoralScenario& fact = *members[i];
        const MoralScenario& cf = *members[j];

        CounterfactualPair pair;
        pair.dataset_id = "moral_machines";
        pair.factual_id = fact.scenario_id;
        pair.counterfactual_id = cf.scenario_id;
        pair.dimension = to_string(fact.dimension);
        std::map<std::string, std::pair<int, int>> fa, ca;
        for (const auto& [t, n] : fact.group_a) fa[t].first = n;
        for (const auto& [t, n] : fact.group_b) fa[t].second = n;
        for (const auto& [t, n] : cf.group_a) ca[t].first = n;
        for (const auto& [t, n] : cf.group_b) ca[t].second = n;
        for (const auto& [t, counts] : fa) {
            auto it = ca.find(t);
            if (it == ca.end() || it->second != counts) pair.changed.push_back(t);
        }
        for (const auto& [t, counts] : ca) {
            if (!fa.count(t)) pair.changed.push_back(t);
        }
        pair.distance = static_cast<int>(pair.changed.size());
        pair.pair_id = short_digest(pair.dataset_id + '\x1e' + pair.factual_id + '\x1e' +
                                    pair.counterfactual_id);
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace nsg
