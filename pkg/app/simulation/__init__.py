"""
-*- coding: utf-8 -*-
 @Author: li
 @ProjectName: majority-switching
 @Email: lijianqiao2906@live.com
 @FileName: __init__.py
 @DateTime: 2025/6/23 上午9:40
 @Docs: 扩散仿真、分配策略与扰动布朗运动
"""
