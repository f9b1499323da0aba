#include <malloc.h>

#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
  // Keep freed blocks in the heap: large tensors are reallocated every step.
  mallopt(M_MMAP_MAX, 0);
  mallopt(M_TRIM_THRESHOLD, -1);

  using namespace dermkit::cli;
  CLI::App app("Dermoscopic lesion analysis pipeline", "dermkit");
  app.require_subcommand(1);
  // Global options may also follow the subcommand.
  app.fallthrough();
  app.set_config("--config", "", "Key = value configuration file; flags override it");
  Globals g;
  app.add_option("--output-root", g.output_root, "Base for relative --out directories")
      ->envname("DERMKIT_OUTPUT_ROOT");
  app.add_flag("-q,--quiet", g.quiet, "No progress lines on stderr");

  add_preprocess(app, g);
  add_augment(app, g);
  add_superpixel(app, g);
  add_train(app, g);
  add_infer(app, g);
  add_evaluate(app, g);
  add_render(app, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalidConfig;
  } catch (const StageError& e) {
    std::cerr << "dermkit " << e.stage() << ": " << e.what() << "\n";
    return e.code();
  } catch (const std::exception& e) {
    std::string stage = "dermkit";
    for (const auto* sub = &app; !sub->get_subcommands().empty();) {
      sub = sub->get_subcommands().front();
      stage += (stage == "dermkit" ? " " : ".") + sub->get_name();
    }
    std::cerr << stage << ": " << e.what() << "\n";
    return kFailed;
  }
  return kOk;
}
