#pragma once

#include <map>
#include <string>

#include "nsg/dataset/schema.hpp"
#include "nsg/errors.hpp"

namespace nsg {

// Natural-language template for one dataset. The body contains {feature}
// placeholders; a placeholder may carry a variant suffix ({gender|pronoun})
// so one feature can surface in several grammatical positions. `phrases`
// maps "placeholder token -> value -> phrase"; values without an entry are
// inserted verbatim, so every rendered question contains each feature's bin
// label either literally or via its declared phrase.
struct QuestionTemplate {
    std::string template_id;
    std::string body;
    std::map<std::string, std::map<std::string, std::string>> phrases;

    static std::string feature_of_token(const std::string& token) {
        auto bar = token.find('|');
        return bar == std::string::npos ? token : token.substr(0, bar);
    }
};

inline RenderedQuestion render_question(const Record& record, const QuestionTemplate& tmpl) {
    std::string out;
    out.reserve(tmpl.body.size() + 128);
    const std::string& body = tmpl.body;
    std::size_t i = 0;
    while (i < body.size()) {
        if (body[i] != '{') {
            out.push_back(body[i]);
            ++i;
            continue;
        }
        const std::size_t close = body.find('}', i);
        if (close == std::string::npos) {
            throw TemplateError("unterminated placeholder in template " + tmpl.template_id);
        }
        const std::string token = body.substr(i + 1, close - i - 1);
        const std::string feature = QuestionTemplate::feature_of_token(token);
        auto vit = record.values.find(feature);
        if (vit == record.values.end()) {
            throw TemplateError("template " + tmpl.template_id +
                                " references unknown feature '" + feature + "'");
        }
        const std::string& value = vit->second;
        auto pit = tmpl.phrases.find(token);
        if (pit != tmpl.phrases.end()) {
            auto mit = pit->second.find(value);
            if (mit != pit->second.end()) {
                out += mit->second;
            } else {
                out += value;
            }
        } else {
            out += value;
        }
        i = close + 1;
    }
    return RenderedQuestion{record.record_id, out, tmpl.template_id};
}

}  // namespace nsg
