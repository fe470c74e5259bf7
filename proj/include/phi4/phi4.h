#ifndef PHI4_H
#define PHI4_H

#include <stddef.h>
#include <stdint.h>

#if defined(PHI4_BUILDING_LIBRARY)
#define PHI4_API __attribute__((visibility("default")))
#else
#define PHI4_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. Values match the core error categories. */
typedef enum {
  PHI4_OK = 0,
  PHI4_E_INVALID_ARGUMENT = 1,
  PHI4_E_DIMENSION = 2,
  PHI4_E_NOT_NORMALIZED = 3,
  PHI4_E_NOT_HERMITIAN = 4,
  PHI4_E_GUARD = 5,
  PHI4_E_NUMERICAL = 6,
  PHI4_E_UNSUPPORTED = 7,
  PHI4_E_SCHEMA = 8,
  PHI4_E_IO = 9,
  PHI4_E_GOLDEN = 10,
  PHI4_E_INTERNAL = 99
} phi4_status;

typedef struct phi4_lattice phi4_lattice;
typedef struct phi4_config phi4_config;
typedef struct phi4_report phi4_report;

/* Message of the last failure on this thread; never NULL. */
PHI4_API const char* phi4_last_error(void);
PHI4_API const char* phi4_version(void);
/* Frees strings handed out by this library. */
PHI4_API void phi4_string_free(char* s);

/* --- lattice ------------------------------------------------------------- */

PHI4_API int phi4_lattice_create(int n_sites, double spacing, double bare_mass, double coupling, int local_dim,
                                 phi4_lattice** out);
PHI4_API void phi4_lattice_free(phi4_lattice* lattice);
PHI4_API int phi4_lattice_dimension(const phi4_lattice* lattice, uint64_t* dim);
/* Lowest `count` eigenvalues in ascending order. */
PHI4_API int phi4_lattice_spectrum(const phi4_lattice* lattice, size_t count, double* eigenvalues);
/* Hamiltonian as "coeff_re coeff_im AXES" lines. */
PHI4_API int phi4_lattice_pauli_text(const phi4_lattice* lattice, char** text);

/* --- experiments --------------------------------------------------------- */

PHI4_API int phi4_config_load(const char* path, phi4_config** out);
PHI4_API int phi4_config_parse(const char* json_text, phi4_config** out);
PHI4_API void phi4_config_free(phi4_config* config);
/* Task name ("spectrum", "ground", ...); owned by the config. */
PHI4_API const char* phi4_config_task(const phi4_config* config);

/* Runs the experiment. out_dir may be NULL (config default), seed may be
   NULL (config seed). */
PHI4_API int phi4_run(const phi4_config* config, const char* out_dir, const uint64_t* seed, phi4_report** out);
/* Compares a run with the golden table next to its config file. Returns
   PHI4_E_GOLDEN when any expectation fails; the verdict is filled either way. */
PHI4_API int phi4_check(const phi4_config* config, const phi4_report* run, phi4_report** verdict);
/* Runs every config of a golden table. *all_pass is strict; *documented_only
   is set when every failure is a recorded deviation. */
PHI4_API int phi4_acceptance(const char* goldens_path, const char* out_dir, phi4_report** out, int* all_pass,
                             int* documented_only);
/* Rewrites DERIVED golden values from fresh runs. */
PHI4_API int phi4_regenerate_derived(const char* goldens_path, size_t* updated);

/* JSON text of a report; owned by the report. */
PHI4_API const char* phi4_report_json(const phi4_report* report);
PHI4_API void phi4_report_free(phi4_report* report);

#ifdef __cplusplus
}
#endif

#endif
