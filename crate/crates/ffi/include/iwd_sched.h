/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef IWD_SCHED_H
#define IWD_SCHED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IwdStatus {
  IWD_STATUS_OK = 0,
  IWD_STATUS_NULL_POINTER = 1,
  IWD_STATUS_INVALID_UTF8 = 2,
  IWD_STATUS_IO = 3,
  IWD_STATUS_PARSE = 4,
  IWD_STATUS_INVALID_WORKFLOW = 5,
  IWD_STATUS_INVALID_ARGUMENT = 6,
  IWD_STATUS_NO_FEASIBLE_SCHEDULE = 7,
  IWD_STATUS_INTERNAL = 8,
} IwdStatus;

typedef enum IwdScheduler {
  IWD_SCHEDULER_IWD = 0,
  IWD_SCHEDULER_GREEDY = 1,
  IWD_SCHEDULER_ORACLE = 2,
} IwdScheduler;

/*
 Opaque cloud profile handle.
 */
typedef struct IwdProfile IwdProfile;

/*
 Opaque schedule handle.
 */
typedef struct IwdSchedule IwdSchedule;

/*
 Opaque workflow handle.
 */
typedef struct IwdWorkflow IwdWorkflow;

/*
 Search parameters; fill with [`iwd_params_default`] and adjust.
 */
typedef struct IwdSearchParams {
  double a_v;
  double b_v;
  double c_v;
  double a_s;
  double b_s;
  double c_s;
  size_t max_iterations;
  double initial_soil;
  size_t vms_to_visit;
  double initial_velocity;
  double initial_drop_soil;
  double epsilon;
  double rho_n;
  double rho_iwd;
} IwdSearchParams;

typedef struct IwdDeadlines {
  double fastest_s;
  double slowest_s;
  double interval_s;
  double deadlines_s[4];
} IwdDeadlines;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread; empty after a success.
 Valid until the next library call on the same thread.
 */
const char *iwd_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *iwd_version(void);

void iwd_string_free(char *s);

/*
 Loads a workflow file, a `.dax` file, or `bundled:<name>`.
 */
enum IwdStatus iwd_workflow_load(const char *path, struct IwdWorkflow **out);

/*
 Parses a workflow document from JSON text.
 */
enum IwdStatus iwd_workflow_from_json(const char *json, struct IwdWorkflow **out);

void iwd_workflow_free(struct IwdWorkflow *wf);

/*
 Number of tasks, or 0 for a null handle.
 */
size_t iwd_workflow_task_count(const struct IwdWorkflow *wf);

/*
 The built-in EC2-style profile.
 */
enum IwdStatus iwd_profile_default(struct IwdProfile **out);

enum IwdStatus iwd_profile_load(const char *path, struct IwdProfile **out);

void iwd_profile_free(struct IwdProfile *p);

enum IwdStatus iwd_params_default(struct IwdSearchParams *out);

/*
 Fastest/slowest single-VM makespans and the four interval deadlines.
 */
enum IwdStatus iwd_deadline_set(const struct IwdWorkflow *wf,
                                const struct IwdProfile *profile,
                                struct IwdDeadlines *out);

/*
 Schedules `wf` on a pool of `pool_size` VMs (0 selects three per catalog
 type) whose degradation is sampled from `seed`. `params` may be null for
 the defaults. An infeasible IWD or greedy result still returns `OK` with a
 handle; check [`iwd_schedule_is_feasible`]. The oracle returns
 `NO_FEASIBLE_SCHEDULE` and no handle when no assignment meets the deadline.
 */
enum IwdStatus iwd_schedule_run(const struct IwdWorkflow *wf,
                                const struct IwdProfile *profile,
                                enum IwdScheduler scheduler,
                                double deadline_s,
                                uint64_t seed,
                                size_t pool_size,
                                const struct IwdSearchParams *params,
                                struct IwdSchedule **out);

void iwd_schedule_free(struct IwdSchedule *s);

/*
 Total execution cost, or NaN for a null handle.
 */
double iwd_schedule_tec(const struct IwdSchedule *s);

/*
 Makespan in seconds, or NaN for a null handle.
 */
double iwd_schedule_makespan(const struct IwdSchedule *s);

bool iwd_schedule_is_feasible(const struct IwdSchedule *s);

/*
 Number of leased VMs, or 0 for a null handle.
 */
size_t iwd_schedule_resource_count(const struct IwdSchedule *s);

/*
 The schedule report as JSON; release with [`iwd_string_free`].
 */
enum IwdStatus iwd_schedule_to_json(const struct IwdSchedule *s, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IWD_SCHED_H */
