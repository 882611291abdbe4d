from .results import QueryResult, all_results, query_result
from .scheduler import Kind, Plan, QueryItem, RunReport, State, Task, plan, resume, run
from .store import ResultStore

__all__ = [
    "Kind", "Plan", "QueryItem", "QueryResult", "ResultStore", "RunReport", "State", "Task",
    "all_results", "plan", "query_result", "resume", "run",
]
