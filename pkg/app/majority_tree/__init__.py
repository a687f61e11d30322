"""
-*- coding: utf-8 -*-
 @Author: li
 @ProjectName: majority-switching
 @Email: lijianqiao2906@live.com
 @FileName: __init__.py
 @DateTime: 2025/6/27 下午3:05
 @Docs: 递归三数多数树的查询代价
"""
