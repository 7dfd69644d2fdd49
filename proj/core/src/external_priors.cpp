#include "gsstyle/errors.hpp"
#include "gsstyle/priors.hpp"
#include "gsstyle/toy_priors.hpp"

#include <cstdlib>
#include <fmt/core.h>

namespace gsstyle {

    OwnedProviders create_providers(const ProviderConfig& config, const Image& score_target) {
        if (config.backend == "toy") {
            OwnedProviders p;
            p.embedding = toy::embedding_provider(config.seed, config.embedding_dim);
            p.features = toy::feature_extractor(config.seed);
            p.descriptor = toy::descriptor_provider(config.seed, config.descriptor_dim);
            p.score = toy::score_provider(score_target, config.total_timesteps, config.seed, config.style_shift);
            p.stylizer = toy::stylized_view_provider();
            return p;
        }
        if (config.backend == "external") {
            // Real pretrained backends live out of tree; this build ships no adapter.
            std::string where = config.external_model_dir;
            if (where.empty()) {
                const char* cache = std::getenv("STYLEME3D_CACHE");
                where = cache ? cache : "<unset STYLEME3D_CACHE>";
            }
            throw BackendUnavailableError(fmt::format(
                "external provider backend requested (model dir: {}) but this build has no adapter; "
                "use backend = \"toy\"",
                where));
        }
        throw ConfigError("providers.backend", fmt::format("unknown provider backend '{}'", config.backend));
    }

} // namespace gsstyle
