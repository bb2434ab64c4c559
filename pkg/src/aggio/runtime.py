"""Minimal message-driven execution substrate.

A runtime owns N executors, each a worker thread draining its own FIFO
task queue. Addressable objects live on exactly one executor at a time
and process one invocation at a time; array elements can migrate between
executors, groups have one pinned member per executor. Invocations are
delivered exactly once, surviving migration via re-forwarding. Executors
can be grouped into emulated "nodes": deliveries crossing a node boundary
are delayed by a configurable latency (plus an optional per-byte transfer
time), which makes locality effects measurable in one process.

The executor-to-executor hot path takes no shared locks: the location and
class tables are read with plain (GIL-atomic) dict lookups, stale reads
are healed by re-forwarding, and delivery accounting uses per-thread
monotone counters. Quiescence detection polls those counters and accepts
only a doubly-confirmed stable zero, which is sound because every counter
only grows and an execution always trails its send.
"""

from __future__ import annotations

import _thread
import heapq
import itertools
import logging
import queue
import sys
import threading
import time
from dataclasses import dataclass

log = logging.getLogger(__name__)

_STOP = object()


def spawn_io_thread(fn) -> None:
    """Start a detached I/O thread without waiting for it to be scheduled.

    threading.Thread.start() blocks the caller until the child takes its
    first interpreter slice, which can cost several milliseconds while
    executors are busy; an executor spawning a reader thread must not pay
    that.
    """
    _thread.start_new_thread(fn, ())


@dataclass(frozen=True)
class RuntimeConfig:
    """num_executors worker loops, grouped into emulated nodes of
    executors_per_node each. inter_node_latency (seconds) delays every
    delivery that crosses a node boundary; inter_node_bandwidth
    (bytes/second, optional) additionally charges payload transfer time.
    """

    num_executors: int
    executors_per_node: int = 1
    inter_node_latency: float = 0.0
    inter_node_bandwidth: float | None = None

    def __post_init__(self) -> None:
        if self.num_executors < 1:
            raise ValueError(f"num_executors must be >= 1, got {self.num_executors}")
        if self.executors_per_node < 1:
            raise ValueError("executors_per_node must be >= 1")
        if self.num_executors % self.executors_per_node != 0:
            raise ValueError(
                f"executors_per_node ({self.executors_per_node}) does not divide "
                f"num_executors ({self.num_executors})"
            )
        if self.inter_node_latency < 0:
            raise ValueError("inter_node_latency must be >= 0")
        if self.inter_node_bandwidth is not None and self.inter_node_bandwidth <= 0:
            raise ValueError("inter_node_bandwidth must be > 0")

    @property
    def num_nodes(self) -> int:
        return self.num_executors // self.executors_per_node

    def node_of(self, executor: int) -> int:
        return executor // self.executors_per_node


@dataclass(frozen=True)
class ObjectRef:
    """Location-independent handle to a live object. Survives migration."""

    object_id: int
    kind: str  # "group-member" | "array-element" | "singleton"


@dataclass(frozen=True)
class CallbackRef:
    """Deferred invocation target: delivering it only enqueues a task, it
    never runs inline on the caller's stack."""

    target: ObjectRef
    method_tag: int


@dataclass
class Invocation:
    target: ObjectRef
    method_tag: int
    payload: object = None


@dataclass(frozen=True)
class RuntimeStats:
    sent: int
    executed: int
    dropped: int
    forwarded: int
    reentrancy_violations: int
    handler_errors: int


class Actor:
    """Base class for addressable runtime objects.

    Public methods of subclasses (names not starting with "_") are entry
    points; each gets a stable small-integer tag in definition order.
    Entry points take exactly one payload argument.
    """

    _name_by_tag: tuple[str, ...] = ()
    _tag_by_name: dict[str, int] = {}

    def __init_subclass__(cls, **kwargs) -> None:
        super().__init_subclass__(**kwargs)
        skip = {name for name in vars(Actor)}
        names: list[str] = []
        for klass in reversed(cls.__mro__):
            if klass in (object, Actor):
                continue
            for name, value in vars(klass).items():
                if name.startswith("_") or name in skip or name in names:
                    continue
                if callable(value):
                    names.append(name)
        cls._name_by_tag = tuple(names)
        cls._tag_by_name = {n: i for i, n in enumerate(names)}

    def _attach(self, runtime: "Runtime", ref: ObjectRef) -> None:
        self._runtime = runtime
        self._ref = ref
        self._busy = False

    @property
    def ref(self) -> ObjectRef:
        return self._ref

    @property
    def runtime(self) -> "Runtime":
        return self._runtime

    def callback(self, method: str) -> CallbackRef:
        return CallbackRef(self._ref, type(self)._tag_by_name[method])

    def send(self, ref: ObjectRef, method: str, payload: object = None) -> None:
        self._runtime.send_to(ref, method, payload)

    def _dispatch(self, tag: int, payload: object) -> None:
        getattr(self, type(self)._name_by_tag[tag])(payload)


class Mailbox(Actor):
    """Bridge from the message-driven world to a plain thread: delivered
    payloads queue up and an external thread takes them in FIFO order."""

    def __init__(self):
        self._cv = threading.Condition()
        self._items: list[object] = []

    def post(self, payload):
        with self._cv:
            self._items.append(payload)
            self._cv.notify_all()

    def take(self, timeout: float | None = 30.0):
        with self._cv:
            if not self._cv.wait_for(lambda: self._items, timeout):
                raise TimeoutError("no payload delivered to mailbox in time")
            return self._items.pop(0)

    def take_many(self, n: int, timeout: float | None = 30.0) -> list[object]:
        deadline = None if timeout is None else time.monotonic() + timeout
        out = []
        for _ in range(n):
            left = None if deadline is None else max(0.0, deadline - time.monotonic())
            out.append(self.take(left))
        return out

    def pending(self) -> int:
        with self._cv:
            return len(self._items)


class Group:
    """One member per executor. The local member is reachable synchronously
    from tasks running on the same executor."""

    def __init__(self, runtime: "Runtime", refs: tuple[ObjectRef, ...], members: tuple[Actor, ...]):
        self._runtime = runtime
        self.refs = refs
        self._members = members

    def member_ref(self, executor: int) -> ObjectRef:
        return self.refs[executor]

    def member(self, executor: int) -> Actor:
        return self._members[executor]

    def local(self) -> Actor:
        current = self._runtime.current_executor()
        if current is None:
            raise RuntimeError("Group.local() requires an executor task context")
        return self._members[current]

    def broadcast(self, method: str, payload: object = None) -> None:
        for ref in self.refs:
            self._runtime.send_to(ref, method, payload)


class ActorArray:
    """Indexed collection of migratable elements."""

    def __init__(self, runtime: "Runtime", refs: tuple[ObjectRef, ...]):
        self._runtime = runtime
        self.refs = refs

    def __len__(self) -> int:
        return len(self.refs)

    def element(self, i: int) -> ObjectRef:
        return self.refs[i]

    def broadcast(self, method: str, payload: object = None) -> None:
        for ref in self.refs:
            self._runtime.send_to(ref, method, payload)


class _Executor:
    __slots__ = (
        "index",
        "node",
        "tasks",
        "objects",
        "thread",
        "sent_count",
        "done_count",
        "class_wall",
        "class_period",
    )

    def __init__(self, index: int, node: int):
        self.index = index
        self.node = node
        self.tasks: queue.SimpleQueue = queue.SimpleQueue()
        self.objects: dict[int, Actor] = {}
        self.thread: threading.Thread | None = None
        # monotone delivery counters; only this executor's thread writes
        self.sent_count = 0
        self.done_count = 0
        # wall seconds by target class; only this executor's thread writes.
        # class_wall covers the handler body; class_period additionally
        # charges each task the gap since the previous task ended, so on a
        # saturated executor the periods partition its entire wall.
        self.class_wall: dict[type, float] = {}
        self.class_period: dict[type, float] = {}


class _DelayLine:
    """Holds deliveries until their due time, then re-enqueues them."""

    def __init__(self, runtime: "Runtime"):
        self._runtime = runtime
        self._cv = threading.Condition()
        self._heap: list[tuple[float, int, Invocation]] = []
        self._seq = itertools.count()
        self._stopping = False
        self._thread = threading.Thread(target=self._run, name="delay-line", daemon=True)
        self._thread.start()

    def schedule(self, due: float, inv: Invocation) -> None:
        with self._cv:
            heapq.heappush(self._heap, (due, next(self._seq), inv))
            self._cv.notify()

    def _run(self) -> None:
        while True:
            with self._cv:
                while not self._stopping and (
                    not self._heap or self._heap[0][0] > time.monotonic()
                ):
                    if self._heap:
                        self._cv.wait(max(0.0, self._heap[0][0] - time.monotonic()))
                    else:
                        self._cv.wait()
                if self._stopping:
                    return
                _, _, inv = heapq.heappop(self._heap)
            self._runtime._enqueue(inv)

    def stop(self) -> None:
        with self._cv:
            self._stopping = True
            self._cv.notify()
        self._thread.join(timeout=5.0)


def _payload_nbytes(payload: object) -> int:
    """Approximate wire size of a payload: only buffers count."""
    if isinstance(payload, (bytes, bytearray)):
        return len(payload)
    if isinstance(payload, memoryview):
        return payload.nbytes
    if isinstance(payload, (tuple, list)):
        return sum(_payload_nbytes(p) for p in payload)
    hint = getattr(payload, "payload_nbytes", None)
    return hint if isinstance(hint, int) else 0


_tls = threading.local()
_active_lock = threading.Lock()
_active_runtime: "Runtime | None" = None


class Runtime:
    def __init__(self, config: RuntimeConfig):
        self.config = config
        # short interpreter slices keep cross-executor handoffs (sends,
        # thread starts) in the sub-millisecond range; restored on shutdown
        self._prior_switch_interval = sys.getswitchinterval()
        sys.setswitchinterval(1e-3)
        self._executors = [
            _Executor(i, config.node_of(i)) for i in range(config.num_executors)
        ]
        self._location: dict[int, int] = {}
        self._classes: dict[int, type] = {}
        self._destroyed: set[int] = set()
        self._loc_lock = threading.Lock()  # serializes table writers only
        # counters for activity originating outside executor threads, plus
        # rare diagnostics; one small lock, never on the send/execute path
        # of executor threads
        self._ext_lock = threading.Lock()
        self._ext_sent = 0
        self._ext_settled = 0
        self._ctl_sent = 0
        self._ctl_settled = 0
        self._io_inflight = 0
        self._dropped = 0
        self._forwarded = 0
        self._reentrancy = 0
        self._handler_errors = 0
        self._id_seq = itertools.count(1)
        self._delay: _DelayLine | None = None
        if config.inter_node_latency > 0 or config.inter_node_bandwidth:
            self._delay = _DelayLine(self)
        self._shut_down = False
        for ex in self._executors:
            ex.thread = threading.Thread(
                target=self._executor_loop, args=(ex,), name=f"exec-{ex.index}", daemon=True
            )
            ex.thread.start()

    # ------------------------------------------------------------------
    # object creation and placement

    def _register(self, instance: Actor, kind: str, executor: int) -> ObjectRef:
        if not isinstance(instance, Actor):
            raise TypeError(f"runtime objects must subclass Actor, got {type(instance)}")
        oid = next(self._id_seq)
        ref = ObjectRef(oid, kind)
        instance._attach(self, ref)
        with self._loc_lock:
            self._classes[oid] = type(instance)
            self._location[oid] = executor
        self._executors[executor].objects[oid] = instance
        return ref

    def create_singleton(self, factory, executor: int = 0) -> ObjectRef:
        self._check_executor(executor)
        return self._register(factory(), "singleton", executor)

    def create_group(self, factory) -> Group:
        members = tuple(factory(e) for e in range(self.config.num_executors))
        refs = tuple(
            self._register(m, "group-member", e) for e, m in enumerate(members)
        )
        return Group(self, refs, members)

    def create_array(self, n: int, factory, placement) -> ActorArray:
        if n < 1:
            raise ValueError(f"array size must be >= 1, got {n}")
        placement = list(placement)
        if len(placement) != n:
            raise ValueError(f"placement covers {len(placement)} elements, need {n}")
        for e in placement:
            self._check_executor(e)
        refs = tuple(
            self._register(factory(i), "array-element", placement[i]) for i in range(n)
        )
        return ActorArray(self, refs)

    def mailbox(self, executor: int = 0) -> Mailbox:
        box = Mailbox()
        self._register(box, "singleton", executor)
        return box

    def destroy(self, ref: ObjectRef) -> None:
        """Removes the object; later sends are dropped with a diagnostic count."""
        oid = ref.object_id
        executor = self._location.get(oid)
        if executor is None:
            return
        with self._ext_lock:
            self._ctl_sent += 1

        def _remove():
            self._executors[self.current_executor()].objects.pop(oid, None)
            with self._loc_lock:
                self._location.pop(oid, None)
                self._classes.pop(oid, None)
                self._destroyed.add(oid)
            with self._ext_lock:
                self._ctl_settled += 1

        self._executors[executor].tasks.put(_remove)

    def _check_executor(self, executor: int) -> None:
        if not 0 <= executor < self.config.num_executors:
            raise ValueError(
                f"executor {executor} out of range [0, {self.config.num_executors})"
            )

    # ------------------------------------------------------------------
    # delivery

    def method_tag(self, ref: ObjectRef, method: str) -> int:
        cls = self._classes.get(ref.object_id)
        if cls is None:
            raise ValueError(f"object {ref.object_id} is not live")
        return cls._tag_by_name[method]

    def callback_for(self, ref: ObjectRef, method: str) -> CallbackRef:
        return CallbackRef(ref, self.method_tag(ref, method))

    def send_to(self, ref: ObjectRef, method: str, payload: object = None) -> None:
        oid = ref.object_id
        cls = self._classes.get(oid)
        dest = self._location.get(oid)
        if cls is None or dest is None:
            with self._ext_lock:
                self._dropped += 1
            return
        self._post(Invocation(ref, cls._tag_by_name[method], payload), dest)

    def deliver(self, cb: CallbackRef, payload: object = None) -> None:
        self.send(Invocation(cb.target, cb.method_tag, payload))

    def send(self, inv: Invocation) -> None:
        dest = self._location.get(inv.target.object_id)
        if dest is None:
            with self._ext_lock:
                self._dropped += 1
            return
        self._post(inv, dest)

    def _post(self, inv: Invocation, dest: int) -> None:
        sender = getattr(_tls, "executor", None)
        if sender is not None:
            self._executors[sender].sent_count += 1
        else:
            with self._ext_lock:
                self._ext_sent += 1
        if self._delay is not None:
            delay = self._delivery_delay(sender, dest, inv.payload)
            if delay > 0:
                self._delay.schedule(time.monotonic() + delay, inv)
                return
        self._executors[dest].tasks.put(inv)

    def _delivery_delay(self, sender: int | None, dest: int, payload: object) -> float:
        cfg = self.config
        if sender is None or cfg.node_of(sender) == cfg.node_of(dest):
            return 0.0
        delay = cfg.inter_node_latency
        if cfg.inter_node_bandwidth:
            delay += _payload_nbytes(payload) / cfg.inter_node_bandwidth
        return delay

    def _enqueue(self, inv: Invocation) -> None:
        """Route to the target's current executor (used after a delivery delay)."""
        dest = self._location.get(inv.target.object_id)
        if dest is None:
            self._settle_dropped()
            return
        self._executors[dest].tasks.put(inv)

    def _settle_dropped(self) -> None:
        with self._ext_lock:
            self._dropped += 1
            self._ext_settled += 1

    def _executor_loop(self, ex: _Executor) -> None:
        _tls.executor = ex.index
        mark = time.monotonic()
        while True:
            task = ex.tasks.get()
            if task is _STOP:
                return
            if isinstance(task, Invocation):
                mark = self._execute(ex, task, mark)
            else:
                task()
                mark = time.monotonic()

    def _execute(self, ex: _Executor, inv: Invocation, mark: float) -> float:
        oid = inv.target.object_id
        obj = ex.objects.get(oid)
        if obj is None:
            current = self._location.get(oid)
            if current is None:
                self._settle_dropped()
                return time.monotonic()
            # The object moved (or its install is still queued): forward.
            with self._ext_lock:
                self._forwarded += 1
            self._executors[current].tasks.put(inv)
            return time.monotonic()
        if obj._busy:
            with self._ext_lock:
                self._reentrancy += 1
        obj._busy = True
        t0 = time.monotonic()
        try:
            obj._dispatch(inv.method_tag, inv.payload)
        except Exception:
            log.exception(
                "handler error in %s tag %d", type(obj).__name__, inv.method_tag
            )
            with self._ext_lock:
                self._handler_errors += 1
        finally:
            obj._busy = False
            t1 = time.monotonic()
            cls = type(obj)
            ex.class_wall[cls] = ex.class_wall.get(cls, 0.0) + (t1 - t0)
            ex.class_period[cls] = ex.class_period.get(cls, 0.0) + (t1 - mark)
            ex.done_count += 1
        return t1

    # ------------------------------------------------------------------
    # migration

    def migrate(self, ref: ObjectRef, dest: int, done: CallbackRef | None = None) -> None:
        """Move an array element to another executor. Invocations sent
        before, during, and after the move are each delivered exactly once;
        stragglers arriving at the old executor are re-forwarded."""
        if ref.kind != "array-element":
            raise ValueError(f"only array elements migrate; {ref.kind} objects are pinned")
        self._check_executor(dest)
        oid = ref.object_id
        current = self._location.get(oid)
        if current is None:
            raise ValueError(f"object {oid} is not live")
        with self._ext_lock:
            self._ctl_sent += 1

        def _finish():
            if done is not None:
                self.deliver(done, ref)
            with self._ext_lock:
                self._ctl_settled += 1

        if current == dest:
            _finish()
            return

        def _detach():
            here = self.current_executor()
            instance = self._executors[here].objects.pop(oid, None)
            if instance is None:
                # Raced with another migration; chase the object.
                now_at = self._location.get(oid)
                if now_at is None:
                    _finish()
                    return
                self._executors[now_at].tasks.put(_detach)
                return

            def _install():
                self._executors[dest].objects[oid] = instance
                _finish()

            self._executors[dest].tasks.put(_install)
            with self._loc_lock:
                self._location[oid] = dest

        self._executors[current].tasks.put(_detach)

    # ------------------------------------------------------------------
    # quiescence and I/O accounting

    def io_begin(self) -> None:
        with self._ext_lock:
            self._io_inflight += 1

    def io_end(self) -> None:
        with self._ext_lock:
            self._io_inflight -= 1

    def _activity(self) -> tuple[int, int, int]:
        sent = done = 0
        for ex in self._executors:
            sent += ex.sent_count
            done += ex.done_count
        with self._ext_lock:
            sent += self._ext_sent + self._ctl_sent
            done += self._ext_settled + self._ctl_settled
            io = self._io_inflight
        return sent, done, io

    def await_quiescence(self, timeout: float | None = None) -> None:
        """Returns once every sent invocation has executed and no I/O thread
        holds an unfinished read. Must be called from outside executor task
        context (an executor waiting on its own queue would deadlock).

        All counters are monotone and an execution is always preceded by
        its send's count, so two consecutive identical sent == settled
        samples with no I/O in flight prove a quiescent instant.
        """
        if self.current_executor() is not None:
            raise RuntimeError("await_quiescence called from an executor task")
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            sent, done, io = self._activity()
            if io == 0 and sent == done:
                time.sleep(0.0002)
                if self._activity() == (sent, done, 0):
                    return
            if deadline is not None and time.monotonic() >= deadline:
                raise TimeoutError(
                    f"no quiescence: sent={sent} settled={done} io={io}"
                )
            time.sleep(0.001)

    # ------------------------------------------------------------------

    @property
    def stats(self) -> RuntimeStats:
        sent = done = 0
        for ex in self._executors:
            sent += ex.sent_count
            done += ex.done_count
        with self._ext_lock:
            return RuntimeStats(
                sent=sent + self._ext_sent,
                executed=done,
                dropped=self._dropped,
                forwarded=self._forwarded,
                reentrancy_violations=self._reentrancy,
                handler_errors=self._handler_errors,
            )

    def current_executor(self) -> int | None:
        return getattr(_tls, "executor", None)

    def live_objects(self) -> int:
        with self._loc_lock:
            return len(self._location)

    def task_wall_by_class(self, periods: bool = False) -> dict[str, float]:
        """Cumulative handler wall seconds per target class name, summed over
        executors. With periods=True each task is also charged the gap back
        to the previous task's end, so on saturated executors the totals
        partition the executors' entire wall. Snapshot only; concurrent
        updates may lag by one task."""
        totals: dict[str, float] = {}
        for ex in self._executors:
            source = ex.class_period if periods else ex.class_wall
            for _ in range(4):
                try:
                    items = list(source.items())
                    break
                except RuntimeError:  # resized mid-iteration; retry
                    continue
            else:
                items = []
            for cls, wall in items:
                totals[cls.__name__] = totals.get(cls.__name__, 0.0) + wall
        return totals

    def shutdown(self) -> None:
        global _active_runtime
        if self._shut_down:
            return
        self._shut_down = True
        if self._delay is not None:
            self._delay.stop()
        for ex in self._executors:
            ex.tasks.put(_STOP)
        for ex in self._executors:
            if ex.thread is not None:
                ex.thread.join(timeout=5.0)
        sys.setswitchinterval(self._prior_switch_interval)
        with _active_lock:
            if _active_runtime is self:
                _active_runtime = None

    def __enter__(self) -> "Runtime":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


def start_runtime(config: RuntimeConfig) -> Runtime:
    """Start the executor loops. Only one runtime may be active per process."""
    global _active_runtime
    with _active_lock:
        if _active_runtime is not None:
            raise RuntimeError("a runtime is already active in this process")
        rt = Runtime(config)
        _active_runtime = rt
        return rt
